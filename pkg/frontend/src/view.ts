/**
 * Pure view-model derivations: what the panes should display for a given
 * (model, state). Rendering code consumes these; tests assert on them.
 */

import { BundleModel, CrossedMatrixDoc, Side } from "./model.js";
import { ExplorationState } from "./state.js";

const PALETTE = [
  "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951", "#ff8ab7",
  "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0", "#2f4b7c", "#b3589a",
];

export function colorOf(index: number): string {
  return PALETTE[index % PALETTE.length]!;
}

export interface LegendEntry {
  nodeId: number;
  color: string;
  size: number;
  level: number;
  isLeaf: boolean;
}

/** Clusters displayed on the map pane: the selected node's children, or the
 * hierarchy roots in the overview. One color class per hierarchy node. */
export function legendEntries(
  model: BundleModel,
  state: ExplorationState,
  side: Side,
): LegendEntry[] {
  const hierarchy = model.hierarchy(side);
  const selection = side === "segment" ? state.segmentSelection : state.trajectorySelection;
  const shown = selection === null ? hierarchy.roots : hierarchy.children(selection);
  return shown.map((nodeId, index) => {
    const node = hierarchy.byId.get(nodeId)!;
    return {
      nodeId,
      color: colorOf(index),
      size: node.vertex_count,
      level: node.level,
      isLeaf: hierarchy.isLeaf(nodeId),
    };
  });
}

export interface BreadcrumbEntry {
  nodeId: number | null; // null = the overview of all roots
  label: string;
}

/** Overview plus the drilled path, e.g. root -> level-2 -> level-3. */
export function breadcrumb(
  model: BundleModel,
  state: ExplorationState,
  side: Side,
): BreadcrumbEntry[] {
  const selection = side === "segment" ? state.segmentSelection : state.trajectorySelection;
  const entries: BreadcrumbEntry[] = [{ nodeId: null, label: "all clusters" }];
  if (selection !== null) {
    for (const nodeId of model.hierarchy(side).pathTo(selection)) {
      entries.push({ nodeId, label: `cluster ${nodeId}` });
    }
  }
  return entries;
}

export function activeMatrix(
  model: BundleModel,
  state: ExplorationState,
): CrossedMatrixDoc | undefined {
  return model.matrixAt(state.trajectoryLevel, state.segmentLevel);
}

/** Monotone grayscale shading: the denser the cell, the darker the fill. */
export function shadeOf(density: number): string {
  const clamped = Math.max(0, Math.min(1, density));
  const channel = Math.round(255 * (1 - clamped));
  return `rgb(${channel},${channel},${channel})`;
}

export interface CellDetail {
  trajectoryNode: number;
  segmentNode: number;
  count: number;
  density: number;
  /** Segments of the highlighted segment cluster (always shown). */
  segmentIds: number[];
  /** Trajectories overlaid on the map; empty for a zero cell. */
  trajectoryIds: number[];
}

/** The drill-in view of one crossed-matrix cell: the segment cluster is
 * highlighted and the trajectory cluster overlaid, side panel numbers
 * included. Returns null when nothing is highlighted. */
export function cellDetail(
  model: BundleModel,
  state: ExplorationState,
): CellDetail | null {
  const matrix = activeMatrix(model, state);
  if (matrix === undefined || state.highlighted === null) {
    return null;
  }
  const { row, col } = state.highlighted;
  const trajectoryNode = matrix.rows[row]!;
  const segmentNode = matrix.cols[col]!;
  const count = matrix.counts[row]![col]!;
  const density = matrix.densities[row]![col]!;
  return {
    trajectoryNode,
    segmentNode,
    count,
    density,
    segmentIds: model.segmentHierarchy.verticesOf(segmentNode),
    trajectoryIds: count > 0 ? model.trajectoryHierarchy.verticesOf(trajectoryNode) : [],
  };
}

export interface MapLine {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export function segmentLine(model: BundleModel, segmentId: number): MapLine {
  const segment = model.segmentsById.get(segmentId)!;
  const a = model.nodesById.get(segment.from)!;
  const b = model.nodesById.get(segment.to)!;
  return { x1: a.x, y1: a.y, x2: b.x, y2: b.y };
}

export interface MapView {
  /** One entry per legend class: the segment lines drawn in its color. */
  classes: { color: string; lines: MapLine[] }[];
  background: MapLine[];
  bounds: { minX: number; minY: number; maxX: number; maxY: number };
}

/** Segment-side map: color classes for the displayed clusters over a muted
 * background of the full network, in dataset coordinate space. */
export function segmentMapView(model: BundleModel, state: ExplorationState): MapView {
  const entries = legendEntries(model, state, "segment");
  const colored = new Set<number>();
  const classes = entries.map((entry) => {
    const members = model.segmentHierarchy.verticesOf(entry.nodeId);
    members.forEach((sid) => colored.add(sid));
    return { color: entry.color, lines: members.map((sid) => segmentLine(model, sid)) };
  });
  const background: MapLine[] = [];
  for (const segment of model.doc.network.segments) {
    if (!colored.has(segment.id)) {
      background.push(segmentLine(model, segment.id));
    }
  }
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const node of model.doc.network.nodes) {
    minX = Math.min(minX, node.x);
    minY = Math.min(minY, node.y);
    maxX = Math.max(maxX, node.x);
    maxY = Math.max(maxY, node.y);
  }
  return { classes, background, bounds: { minX, minY, maxX, maxY } };
}

/** Polylines of a trajectory cluster overlay (for the highlighted cell). */
export function trajectoryOverlay(model: BundleModel, trajectoryIds: number[]): MapLine[][] {
  return trajectoryIds.map((tid) => {
    const record = model.trajectoriesById.get(tid)!;
    return record.segments.map((sid) => segmentLine(model, sid));
  });
}
