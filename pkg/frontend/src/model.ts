/**
 * Bundle parsing, validation and indexed access.
 *
 * The explorer performs no clustering or similarity math: every number shown
 * comes straight from the bundle document, which is re-validated on load so
 * tampered files fail with the offending ids named.
 */

export const SUPPORTED_SCHEMA_VERSION = 1;

export interface NetworkNode {
  id: number;
  x: number;
  y: number;
}

export interface NetworkSegment {
  id: number;
  from: number;
  to: number;
}

export interface TrajectoryRecord {
  id: number;
  segments: number[];
  leaf_cluster: number | null;
  level1_cluster: number | null;
}

export interface HierarchyNodeDoc {
  id: number;
  parent: number; // -1 for roots
  level: number;
  significant: boolean;
  modularity: number | null;
  vertex_count: number;
}

export interface HierarchyDoc {
  level1_modularity: number | null;
  max_level: number;
  nodes: HierarchyNodeDoc[];
  membership: Record<string, number>;
}

export interface CrossedMatrixDoc {
  trajectory_level: number;
  segment_level: number;
  rows: number[];
  cols: number[];
  row_sizes: number[];
  col_sizes: number[];
  counts: number[][];
  densities: number[][];
}

export interface SummaryDoc {
  node_id: number;
  level: number;
  size: number;
  visitor_count: number;
  internal_weight: number;
  bbox: number[];
}

export interface BundleDoc {
  schema_version: number;
  network: { nodes: NetworkNode[]; segments: NetworkSegment[] };
  trajectories: TrajectoryRecord[];
  segment_hierarchy: HierarchyDoc;
  trajectory_hierarchy: HierarchyDoc;
  crossed_matrices: CrossedMatrixDoc[];
  summaries: { segment: SummaryDoc[]; trajectory: SummaryDoc[] };
}

export type Side = "segment" | "trajectory";

/** Indexed view over one hierarchy of the bundle. */
export class Hierarchy {
  readonly byId = new Map<number, HierarchyNodeDoc>();
  readonly childrenOf = new Map<number, number[]>();
  readonly roots: number[] = [];
  readonly maxLevel: number;
  private readonly leafMembers = new Map<number, number[]>();
  private readonly verticesCache = new Map<number, number[]>();

  constructor(doc: HierarchyDoc) {
    for (const node of doc.nodes) {
      this.byId.set(node.id, node);
    }
    for (const node of doc.nodes) {
      if (node.parent === -1) {
        this.roots.push(node.id);
      } else {
        const siblings = this.childrenOf.get(node.parent) ?? [];
        siblings.push(node.id);
        this.childrenOf.set(node.parent, siblings);
      }
    }
    this.roots.sort((a, b) => a - b);
    for (const children of this.childrenOf.values()) {
      children.sort((a, b) => a - b);
    }
    for (const [vertex, leaf] of Object.entries(doc.membership)) {
      const members = this.leafMembers.get(leaf) ?? [];
      members.push(Number(vertex));
      this.leafMembers.set(leaf, members);
    }
    this.maxLevel = doc.max_level;
  }

  children(nodeId: number): number[] {
    return this.childrenOf.get(nodeId) ?? [];
  }

  isLeaf(nodeId: number): boolean {
    return this.children(nodeId).length === 0;
  }

  /** Path of node ids from the root ancestor down to nodeId (inclusive). */
  pathTo(nodeId: number): number[] {
    const path: number[] = [];
    let current: number | undefined = nodeId;
    while (current !== undefined && current !== -1) {
      path.push(current);
      current = this.byId.get(current)?.parent;
      if (current === -1) break;
    }
    return path.reverse();
  }

  /** Member vertices of a node: union of its descendant leaves. */
  verticesOf(nodeId: number): number[] {
    const cached = this.verticesCache.get(nodeId);
    if (cached) return cached;
    const collected: number[] = [];
    const stack = [nodeId];
    while (stack.length > 0) {
      const node = stack.pop()!;
      const children = this.children(node);
      if (children.length === 0) {
        collected.push(...(this.leafMembers.get(node) ?? []));
      } else {
        stack.push(...children);
      }
    }
    collected.sort((a, b) => a - b);
    this.verticesCache.set(nodeId, collected);
    return collected;
  }
}

export class BundleModel {
  readonly doc: BundleDoc;
  readonly nodesById = new Map<number, NetworkNode>();
  readonly segmentsById = new Map<number, NetworkSegment>();
  readonly trajectoriesById = new Map<number, TrajectoryRecord>();
  readonly segmentHierarchy: Hierarchy;
  readonly trajectoryHierarchy: Hierarchy;
  private readonly matrices = new Map<string, CrossedMatrixDoc>();

  constructor(doc: BundleDoc) {
    this.doc = doc;
    for (const node of doc.network.nodes) this.nodesById.set(node.id, node);
    for (const segment of doc.network.segments) this.segmentsById.set(segment.id, segment);
    for (const trajectory of doc.trajectories) this.trajectoriesById.set(trajectory.id, trajectory);
    this.segmentHierarchy = new Hierarchy(doc.segment_hierarchy);
    this.trajectoryHierarchy = new Hierarchy(doc.trajectory_hierarchy);
    for (const matrix of doc.crossed_matrices) {
      this.matrices.set(`${matrix.trajectory_level}:${matrix.segment_level}`, matrix);
    }
  }

  hierarchy(side: Side): Hierarchy {
    return side === "segment" ? this.segmentHierarchy : this.trajectoryHierarchy;
  }

  matrixAt(trajectoryLevel: number, segmentLevel: number): CrossedMatrixDoc | undefined {
    return this.matrices.get(`${trajectoryLevel}:${segmentLevel}`);
  }
}

export type LoadResult =
  | { ok: true; model: BundleModel }
  | { ok: false; errors: string[] };

/** Structural + referential validation; returns human-readable errors. */
export function validateBundle(doc: unknown): string[] {
  if (typeof doc !== "object" || doc === null) {
    return ["bundle is not a JSON object"];
  }
  const bundle = doc as Partial<BundleDoc>;
  if (bundle.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    return [
      `unsupported schema_version ${String(bundle.schema_version)} ` +
      `(this explorer understands version ${SUPPORTED_SCHEMA_VERSION})`,
    ];
  }
  const errors: string[] = [];
  const network = bundle.network ?? { nodes: [], segments: [] };
  const nodeIds = new Set(network.nodes.map((n) => n.id));
  const segmentIds = new Set<number>();
  for (const segment of network.segments) {
    segmentIds.add(segment.id);
    for (const endpoint of [segment.from, segment.to]) {
      if (!nodeIds.has(endpoint)) {
        errors.push(`segment ${segment.id} references unknown node ${endpoint}`);
      }
    }
  }
  const trajectoryIds = new Set<number>();
  for (const trajectory of bundle.trajectories ?? []) {
    trajectoryIds.add(trajectory.id);
    for (const sid of trajectory.segments) {
      if (!segmentIds.has(sid)) {
        errors.push(`trajectory ${trajectory.id} references unknown segment ${sid}`);
      }
    }
  }

  const checkHierarchy = (
    name: string,
    hierarchyDoc: HierarchyDoc | undefined,
    universe: Set<number>,
    kind: string,
  ): Set<number> => {
    const ids = new Set<number>();
    for (const node of hierarchyDoc?.nodes ?? []) ids.add(node.id);
    for (const node of hierarchyDoc?.nodes ?? []) {
      if (node.parent !== -1 && !ids.has(node.parent)) {
        errors.push(`${name} node ${node.id} references unknown parent ${node.parent}`);
      }
      if (node.parent === -1 && node.level !== 1) {
        errors.push(`${name} root node ${node.id} has level ${node.level}`);
      }
    }
    for (const [vertex, leaf] of Object.entries(hierarchyDoc?.membership ?? {})) {
      if (!ids.has(leaf)) {
        errors.push(`${name} membership references unknown node ${leaf}`);
      }
      if (!universe.has(Number(vertex))) {
        errors.push(`${name} membership references unknown ${kind} ${vertex}`);
      }
    }
    return ids;
  };

  const segmentNodes = checkHierarchy(
    "segment hierarchy", bundle.segment_hierarchy, segmentIds, "segment");
  const trajectoryNodes = checkHierarchy(
    "trajectory hierarchy", bundle.trajectory_hierarchy, trajectoryIds, "trajectory");

  for (const trajectory of bundle.trajectories ?? []) {
    for (const key of ["leaf_cluster", "level1_cluster"] as const) {
      const ref = trajectory[key];
      if (ref !== null && ref !== undefined && !trajectoryNodes.has(ref)) {
        errors.push(`trajectory ${trajectory.id} ${key} references unknown node ${ref}`);
      }
    }
  }

  (bundle.crossed_matrices ?? []).forEach((matrix, index) => {
    for (const nodeId of matrix.rows) {
      if (!trajectoryNodes.has(nodeId)) {
        errors.push(`crossed matrix ${index} row references unknown node ${nodeId}`);
      }
    }
    for (const nodeId of matrix.cols) {
      if (!segmentNodes.has(nodeId)) {
        errors.push(`crossed matrix ${index} column references unknown node ${nodeId}`);
      }
    }
    const shapeBad = (grid: number[][]) =>
      grid.length !== matrix.rows.length ||
      grid.some((row) => row.length !== matrix.cols.length);
    if (shapeBad(matrix.counts) || shapeBad(matrix.densities)) {
      errors.push(`crossed matrix ${index} has a shape mismatch`);
    }
    for (const row of matrix.densities) {
      for (const value of row) {
        if (!(value >= 0 && value <= 1)) {
          errors.push(`crossed matrix ${index} density ${value} out of range`);
        }
      }
    }
  });

  for (const [kind, nodeSet] of [
    ["segment", segmentNodes],
    ["trajectory", trajectoryNodes],
  ] as const) {
    for (const summary of bundle.summaries?.[kind] ?? []) {
      if (!nodeSet.has(summary.node_id)) {
        errors.push(`${kind} summary references unknown node ${summary.node_id}`);
      }
    }
  }
  return errors;
}

export function loadBundle(text: string): LoadResult {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (error) {
    return { ok: false, errors: [`bundle is not valid JSON: ${String(error)}`] };
  }
  const errors = validateBundle(doc);
  if (errors.length > 0) {
    return { ok: false, errors };
  }
  return { ok: true, model: new BundleModel(doc as BundleDoc) };
}
