"""Command-line workflows: ingest, embed-import, extract, export."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from narrative_atlas.cli import main
from narrative_atlas.synth import corpus_jsonl, embeddings_jsonl, generate_planted_corpus


@pytest.fixture(scope="module")
def planted():
    return generate_planted_corpus(1, 8, 0.05, "accepted", seed=31)


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workspace(tmp_path, planted):
    """Store directory plus dump and embedding files ready to ingest."""
    dump = tmp_path / "dump.jsonl"
    dump.write_text(corpus_jsonl(planted))
    emb = tmp_path / "embeddings.jsonl"
    emb.write_text(embeddings_jsonl(planted))
    return {"store": tmp_path / "store", "dump": dump, "embeddings": emb}


def _cli(workspace, *args):
    return ["--store", str(workspace["store"]), *args]


def _ingested(runner, workspace):
    result = runner.invoke(main, _cli(workspace, "ingest", str(workspace["dump"])))
    assert result.exit_code == 0, result.stdout
    corpus_id = result.stdout.splitlines()[0]
    result = runner.invoke(
        main,
        _cli(workspace, "embed-import", "--corpus", corpus_id, str(workspace["embeddings"])),
    )
    assert result.exit_code == 0, result.stdout
    return corpus_id


RELAXED_FLAGS = ["--k", "4", "--mincover", "0", "--minscore", "0"]


class TestIngest:
    def test_prints_id_then_counts(self, runner, workspace):
        result = runner.invoke(main, _cli(workspace, "ingest", str(workspace["dump"])))
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert len(lines[0]) == 16
        assert lines[1] == "synthetic\t8"

    def test_missing_file_exits_2(self, runner, workspace, tmp_path):
        result = runner.invoke(main, _cli(workspace, "ingest", str(tmp_path / "nope.jsonl")))
        assert result.exit_code == 2
        assert "file not found" in result.stderr

    def test_corrupt_dump_exits_2(self, runner, workspace, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\nalso not json\n")
        result = runner.invoke(main, _cli(workspace, "ingest", str(bad)))
        assert result.exit_code == 2
        assert "error:" in result.stderr


class TestEmbedImport:
    def test_happy_path_reports_hash(self, runner, workspace, planted):
        result = runner.invoke(main, _cli(workspace, "ingest", str(workspace["dump"])))
        corpus_id = result.stdout.splitlines()[0]
        result = runner.invoke(
            main,
            _cli(workspace, "embed-import", "--corpus", corpus_id, str(workspace["embeddings"])),
        )
        assert result.exit_code == 0
        assert planted.table.content_hash() in result.stdout
        assert corpus_id in result.stdout

    def test_unknown_corpus_exits_2(self, runner, workspace):
        result = runner.invoke(
            main,
            _cli(workspace, "embed-import", "--corpus", "deadbeefdeadbeef",
                 str(workspace["embeddings"])),
        )
        assert result.exit_code == 2
        assert "unknown corpus" in result.stderr

    def test_missing_file_exits_2(self, runner, workspace, tmp_path):
        result = runner.invoke(
            main,
            _cli(workspace, "embed-import", "--corpus", "deadbeefdeadbeef",
                 str(tmp_path / "nope.jsonl")),
        )
        assert result.exit_code == 2
        assert "file not found" in result.stderr


class TestExtract:
    def test_writes_document_to_stdout(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main, _cli(workspace, "extract", "--corpus", corpus_id, *RELAXED_FLAGS)
        )
        assert result.exit_code == 0, result.stderr
        doc = json.loads(result.stdout)
        assert doc["schema_version"] == 1
        assert doc["community"] == "synthetic"
        assert "map " in result.stderr and "storylines" in result.stderr

    def test_dot_format(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id, *RELAXED_FLAGS,
                 "--format", "dot"),
        )
        assert result.exit_code == 0
        assert result.stdout.startswith("digraph")

    def test_default_output_writes_both_renderings(self, runner, workspace, tmp_path):
        corpus_id = _ingested(runner, workspace)
        base = tmp_path / "out" / "map"
        base.parent.mkdir()
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id, *RELAXED_FLAGS,
                 "--output", str(base)),
        )
        assert result.exit_code == 0
        doc = json.loads(base.with_suffix(".json").read_text())
        assert doc["schema_version"] == 1
        assert base.with_suffix(".dot").read_text().startswith("digraph")

    def test_config_file_with_flag_override(self, runner, workspace, tmp_path):
        corpus_id = _ingested(runner, workspace)
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"k": 3, "mincover": 0.0, "minscore": 0.0}))
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id,
                 "--config", str(cfg), "--k", "4"),
        )
        assert result.exit_code == 0, result.stderr
        doc = json.loads(result.stdout)
        assert doc["params"]["k"] == 4
        assert doc["params"]["mincover"] == 0.0

    def test_epoch_window_narrows_map(self, runner, workspace, planted):
        corpus_id = _ingested(runner, workspace)
        times = [planted.corpus.get(eid).created_at for eid in planted.corpus.ids()]
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id,
                 "--k", "3", "--mincover", "0", "--minscore", "0",
                 "--from", str(times[0]), "--to", str(times[4])),
        )
        assert result.exit_code == 0, result.stderr
        doc = json.loads(result.stdout)
        assert set(n["id"] for n in doc["nodes"]) <= set(planted.corpus.ids()[:5])

    def test_date_window_outside_data_exits_2(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id, *RELAXED_FLAGS,
                 "--from", "2021-01-01", "--to", "2021-01-02"),
        )
        assert result.exit_code == 2
        assert "empty filtered corpus" in result.stderr

    def test_unparseable_time_exits_2(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id,
                 "--from", "yesterday", "--to", "today"),
        )
        assert result.exit_code == 2
        assert "invalid time" in result.stderr

    def test_half_open_window_exits_2(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id, "--from", "2020-09-13"),
        )
        assert result.exit_code == 2
        assert "given together" in result.stderr

    def test_unknown_corpus_exits_2(self, runner, workspace):
        result = runner.invoke(
            main, _cli(workspace, "extract", "--corpus", "deadbeefdeadbeef")
        )
        assert result.exit_code == 2
        assert "unknown corpus" in result.stderr

    def test_extract_without_embeddings_exits_2(self, runner, workspace):
        result = runner.invoke(main, _cli(workspace, "ingest", str(workspace["dump"])))
        corpus_id = result.stdout.splitlines()[0]
        result = runner.invoke(
            main, _cli(workspace, "extract", "--corpus", corpus_id, *RELAXED_FLAGS)
        )
        assert result.exit_code == 2
        assert "no embeddings imported" in result.stderr

    def test_infeasible_exits_3(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id,
                 "--k", "4", "--mincover", "0", "--minscore", "0.99"),
        )
        assert result.exit_code == 3
        assert "constraint infeasible" in result.stderr

    def test_invalid_flag_value_exits_2(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main, _cli(workspace, "extract", "--corpus", corpus_id, "--k", "1")
        )
        assert result.exit_code == 2
        assert "invalid K" in result.stderr


class TestExport:
    def test_reexports_saved_map(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main, _cli(workspace, "extract", "--corpus", corpus_id, *RELAXED_FLAGS)
        )
        extracted = result.stdout
        map_id = result.stderr.split()[1].rstrip(":")
        result = runner.invoke(main, _cli(workspace, "export", map_id))
        assert result.exit_code == 0
        assert result.stdout == extracted

    def test_dot_rendering_matches_extract(self, runner, workspace):
        corpus_id = _ingested(runner, workspace)
        result = runner.invoke(
            main,
            _cli(workspace, "extract", "--corpus", corpus_id, *RELAXED_FLAGS,
                 "--format", "dot"),
        )
        dot = result.stdout
        map_id = result.stderr.split()[1].rstrip(":")
        result = runner.invoke(main, _cli(workspace, "export", map_id, "--format", "dot"))
        assert result.exit_code == 0
        assert result.stdout == dot

    def test_unknown_map_exits_2(self, runner, workspace):
        result = runner.invoke(main, _cli(workspace, "export", "nope"))
        assert result.exit_code == 2
        assert "unknown map" in result.stderr
