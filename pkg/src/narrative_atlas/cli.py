"""Command-line interface: ingest, embed-import, extract, export, serve.

Exit codes: 0 success, 2 validation problems (bad flags, missing files,
unknown ids), 3 infeasible extraction, 4 solver inconsistency.
"""

from __future__ import annotations

import datetime as dt
import json
import sys
from pathlib import Path

import click

from .errors import (
    InfeasibleError,
    NarrativeAtlasError,
    NotFoundError,
    SolverInconsistencyError,
    ValidationError,
)
from .mapgraph import canonical_json, dot_from_document, to_document
from .pipeline import ExtractionConfig, extract
from .store import CorpusStore, resolve_store_path

EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_INCONSISTENT = 4


def _fail(exc: NarrativeAtlasError) -> None:
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, InfeasibleError):
        sys.exit(EXIT_INFEASIBLE)
    if isinstance(exc, SolverInconsistencyError):
        sys.exit(EXIT_INCONSISTENT)
    sys.exit(EXIT_VALIDATION)


def _parse_time(value: str | None, end_of_day: bool) -> int | None:
    """Accept unix epoch seconds or an ISO date (interpreted as UTC)."""
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        pass
    try:
        day = dt.date.fromisoformat(value)
    except ValueError:
        raise ValidationError(f"invalid time: cannot parse {value!r} (epoch or YYYY-MM-DD)")
    moment = dt.datetime.combine(
        day, dt.time(23, 59, 59) if end_of_day else dt.time(0, 0, 0), tzinfo=dt.timezone.utc
    )
    return int(moment.timestamp())


@click.group()
@click.option("--store", "store_path", default=None, help="Store directory (default: $NARRATIVE_ATLAS_STORE).")
@click.pass_context
def main(ctx: click.Context, store_path: str | None):
    """Extract accepted community narratives as navigable maps."""
    ctx.obj = CorpusStore(resolve_store_path(store_path))


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(path_type=Path))
@click.pass_obj
def ingest(store: CorpusStore, paths: tuple[Path, ...]):
    """Store submission dump files; prints the corpus id and counts."""
    lines: list[str] = []
    for path in paths:
        if not path.exists():
            click.echo(f"error: file not found: {path}", err=True)
            sys.exit(EXIT_VALIDATION)
        lines.extend(path.read_text().splitlines())
    try:
        corpus_id, counts = store.ingest(iter(lines))
    except NarrativeAtlasError as exc:
        _fail(exc)
    click.echo(corpus_id)
    for community, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        click.echo(f"{community}\t{count}")


@main.command("embed-import")
@click.option("--corpus", "corpus_id", required=True, help="Target corpus id.")
@click.argument("path", type=click.Path(path_type=Path))
@click.pass_obj
def embed_import(store: CorpusStore, corpus_id: str, path: Path):
    """Attach a line-delimited embedding file to a stored corpus."""
    if not path.exists():
        click.echo(f"error: file not found: {path}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        with path.open() as fh:
            content_hash = store.attach_embeddings(corpus_id, fh)
    except NarrativeAtlasError as exc:
        _fail(exc)
    click.echo(f"imported embeddings {content_hash} for corpus {corpus_id}")


def _build_config(config_file: Path | None, overrides: dict) -> ExtractionConfig:
    base: dict = {}
    if config_file is not None:
        if not config_file.exists():
            raise ValidationError(f"file not found: {config_file}")
        base = json.loads(config_file.read_text())
        if not isinstance(base, dict):
            raise ValidationError(f"invalid config: file {config_file} is not an object")
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExtractionConfig.from_dict(base)


@main.command("extract")
@click.option("--corpus", "corpus_id", required=True, help="Stored corpus id.")
@click.option("--community", default=None)
@click.option("--keyword", default=None)
@click.option("--from", "time_from", default=None, help="Window start (epoch or YYYY-MM-DD).")
@click.option("--to", "time_to", default=None, help="Window end, inclusive (epoch or YYYY-MM-DD).")
@click.option("--k", type=int, default=None, help="Expected main story length.")
@click.option("--mincover", type=float, default=None)
@click.option("--minscore", type=float, default=None)
@click.option("--num-clusters", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--max-successors", type=int, default=None)
@click.option("--tau", type=float, default=None)
@click.option("--config", "config_file", type=click.Path(path_type=Path), default=None,
              help="JSON config file; explicit flags override its keys.")
@click.option("--format", "fmt", type=click.Choice(["doc", "dot"]), default=None)
@click.option("--output", type=click.Path(path_type=Path), default=None)
@click.pass_obj
def extract_cmd(store, corpus_id, community, keyword, time_from, time_to, k, mincover,
                minscore, num_clusters, seed, max_successors, tau, config_file, fmt, output):
    """Extract a narrative map from a stored corpus."""
    try:
        start = _parse_time(time_from, end_of_day=False)
        end = _parse_time(time_to, end_of_day=True)
        window = None
        if (start is None) != (end is None):
            raise ValidationError("invalid window: --from and --to must be given together")
        if start is not None and end is not None:
            window = [start, end]
        config = _build_config(
            config_file,
            {
                "community": community,
                "keyword": keyword,
                "window": window,
                "k": k,
                "mincover": mincover,
                "minscore": minscore,
                "num_clusters": num_clusters,
                "seed": seed,
                "max_successors": max_successors,
                "tau": tau,
            },
        )
        corpora = store.load_corpora(corpus_id)
        table = store.load_embeddings_for(corpus_id)
        nmap = extract(corpora, table, config)
    except NarrativeAtlasError as exc:
        _fail(exc)

    doc = to_document(nmap)
    map_id = store.map_id_for(corpus_id, config.fingerprint())
    store.save_map(map_id, {"map_id": map_id, "corpus_id": corpus_id, "map": doc})
    click.echo(
        f"map {map_id}: {len(doc['nodes'])} nodes, {len(doc['edges'])} edges, "
        f"{len(doc['storylines'])} storylines",
        err=True,
    )

    if fmt is None and output is not None:
        output.with_suffix(".json").write_text(canonical_json(doc))
        output.with_suffix(".dot").write_text(dot_from_document(doc))
        return
    rendered = dot_from_document(doc) if fmt == "dot" else canonical_json(doc)
    if output is not None:
        output.write_text(rendered)
    else:
        click.echo(rendered, nl=False)


@main.command("export")
@click.argument("map_id")
@click.option("--format", "fmt", type=click.Choice(["doc", "dot"]), default="doc")
@click.option("--output", type=click.Path(path_type=Path), default=None)
@click.pass_obj
def export_cmd(store: CorpusStore, map_id: str, fmt: str, output: Path | None):
    """Re-export a previously extracted map."""
    try:
        payload = store.load_map(map_id)
    except NotFoundError as exc:
        _fail(exc)
    doc = payload["map"]
    rendered = dot_from_document(doc) if fmt == "dot" else canonical_json(doc)
    if output is not None:
        output.write_text(rendered)
    else:
        click.echo(rendered, nl=False)


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.pass_obj
def serve(store: CorpusStore, port: int, host: str):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store), host=host, port=port)


if __name__ == "__main__":
    main()
