import type { MapDocument } from "./types.js";

export interface NodePosition {
  id: string;
  x: number;
  y: number;
  row: number;
  column: number;
}

export interface Layout {
  positions: Map<string, NodePosition>;
  columnCount: number;
  width: number;
  height: number;
}

export const COLUMN_WIDTH = 260;
export const ROW_HEIGHT = 64;
export const MARGIN_X = 130;
export const MARGIN_Y = 48;

/**
 * Layered layout: one row per event ordered newest-first, one column per
 * storyline in document order.  A pure function of the document (stable
 * sorts, no randomness), so identical documents always lay out identically.
 */
export function layoutDocument(doc: MapDocument): Layout {
  const columnOf = new Map<number, number>();
  doc.storylines.forEach((line, index) => columnOf.set(line.id, index));

  const ordered = [...doc.nodes].sort(
    (a, b) => b.created_at - a.created_at || (a.id < b.id ? -1 : 1),
  );

  const positions = new Map<string, NodePosition>();
  ordered.forEach((node, row) => {
    const column = columnOf.get(node.storyline) ?? 0;
    positions.set(node.id, {
      id: node.id,
      x: MARGIN_X + column * COLUMN_WIDTH,
      y: MARGIN_Y + row * ROW_HEIGHT,
      row,
      column,
    });
  });

  const columnCount = Math.max(1, doc.storylines.length);
  return {
    positions,
    columnCount,
    width: MARGIN_X * 2 + Math.max(0, columnCount - 1) * COLUMN_WIDTH,
    height: MARGIN_Y * 2 + Math.max(0, ordered.length - 1) * ROW_HEIGHT,
  };
}
