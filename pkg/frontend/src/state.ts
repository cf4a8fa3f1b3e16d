/**
 * Exploration state machine. States are immutable snapshots; every transition
 * returns a new state (or the same object when nothing changes), so a history
 * of states replays to identical views.
 */

import { BundleModel, Side } from "./model.js";

export interface CellRef {
  row: number; // index into the active matrix
  col: number;
}

export interface ExplorationState {
  /** Selected hierarchy node per side; null means the root overview. */
  readonly segmentSelection: number | null;
  readonly trajectorySelection: number | null;
  /** Active level pair of the crossed matrix. */
  readonly trajectoryLevel: number;
  readonly segmentLevel: number;
  readonly highlighted: CellRef | null;
}

/** Default view: level-2 x level-2 crossed matrix when the hierarchies reach
 * that deep, mirroring the usual second-level analysis view. */
export function initialState(model: BundleModel): ExplorationState {
  return {
    segmentSelection: null,
    trajectorySelection: null,
    trajectoryLevel: Math.min(2, model.trajectoryHierarchy.maxLevel),
    segmentLevel: Math.min(2, model.segmentHierarchy.maxLevel),
    highlighted: null,
  };
}

/**
 * Zoom into a cluster: the map pane re-colors to the node's children and the
 * breadcrumb extends. Drilling into a leaf (or an unknown node) is a no-op
 * and returns the identical state object, so callers can disable the
 * affordance cheaply.
 */
export function drillDown(
  model: BundleModel,
  state: ExplorationState,
  side: Side,
  nodeId: number,
): ExplorationState {
  const hierarchy = model.hierarchy(side);
  if (!hierarchy.byId.has(nodeId) || hierarchy.isLeaf(nodeId)) {
    return state;
  }
  if (side === "segment") {
    return { ...state, segmentSelection: nodeId, highlighted: null };
  }
  return { ...state, trajectorySelection: nodeId, highlighted: null };
}

/** Jump back to an ancestor (or the overview with nodeId null). */
export function drillUpTo(
  model: BundleModel,
  state: ExplorationState,
  side: Side,
  nodeId: number | null,
): ExplorationState {
  if (nodeId !== null && !model.hierarchy(side).byId.has(nodeId)) {
    return state;
  }
  if (side === "segment") {
    return { ...state, segmentSelection: nodeId, highlighted: null };
  }
  return { ...state, trajectorySelection: nodeId, highlighted: null };
}

/** Re-pivot the crossed matrix to another level pair. */
export function setLevelPair(
  model: BundleModel,
  state: ExplorationState,
  trajectoryLevel: number,
  segmentLevel: number,
): ExplorationState {
  if (model.matrixAt(trajectoryLevel, segmentLevel) === undefined) {
    return state;
  }
  return { ...state, trajectoryLevel, segmentLevel, highlighted: null };
}

/** Highlight one cell of the active crossed matrix (zero cells included). */
export function selectCell(
  model: BundleModel,
  state: ExplorationState,
  row: number,
  col: number,
): ExplorationState {
  const matrix = model.matrixAt(state.trajectoryLevel, state.segmentLevel);
  if (
    matrix === undefined ||
    row < 0 || row >= matrix.rows.length ||
    col < 0 || col >= matrix.cols.length
  ) {
    return state;
  }
  return { ...state, highlighted: { row, col } };
}

/** Linear undo/redo over exploration states. */
export class StateHistory {
  private readonly states: ExplorationState[];
  private index = 0;

  constructor(initial: ExplorationState) {
    this.states = [initial];
  }

  get current(): ExplorationState {
    return this.states[this.index]!;
  }

  push(state: ExplorationState): ExplorationState {
    if (state === this.current) {
      return state; // no-op transitions do not pollute the history
    }
    this.states.splice(this.index + 1);
    this.states.push(state);
    this.index += 1;
    return state;
  }

  get canBack(): boolean {
    return this.index > 0;
  }

  get canForward(): boolean {
    return this.index < this.states.length - 1;
  }

  back(): ExplorationState {
    if (this.canBack) this.index -= 1;
    return this.current;
  }

  forward(): ExplorationState {
    if (this.canForward) this.index += 1;
    return this.current;
  }
}
