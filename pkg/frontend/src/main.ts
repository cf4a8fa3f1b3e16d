/** Application wiring: file input -> model -> state/history -> panes. */

import { BundleModel, loadBundle, Side } from "./model.js";
import {
  drillDown, drillUpTo, ExplorationState, initialState, selectCell,
  setLevelPair, StateHistory,
} from "./state.js";
import { renderMap, renderMatrix } from "./render.js";
import { breadcrumb, cellDetail, legendEntries } from "./view.js";

let model: BundleModel | null = null;
let history: StateHistory | null = null;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function redraw(): void {
  if (!model || !history) return;
  const state = history.current;
  renderMap(el<HTMLCanvasElement>("map"), model, state);
  renderMatrix(el("matrix"), model, state, (row, col) => {
    apply(selectCell(model!, history!.current, row, col));
  });
  renderBreadcrumbs(state);
  renderLegend(state, "segment", "segment-legend");
  renderLegend(state, "trajectory", "trajectory-legend");
  renderLevelControls(state);
  renderDetail(state);
  el<HTMLButtonElement>("back").disabled = !history.canBack;
  el<HTMLButtonElement>("forward").disabled = !history.canForward;
}

function apply(next: ExplorationState): void {
  if (!history) return;
  history.push(next);
  redraw();
}

function renderBreadcrumbs(state: ExplorationState): void {
  for (const side of ["segment", "trajectory"] as Side[]) {
    const container = el(`${side}-breadcrumb`);
    container.textContent = "";
    breadcrumb(model!, state, side).forEach((entry, index, all) => {
      const link = document.createElement("a");
      link.textContent = entry.label;
      link.href = "#";
      link.onclick = (event) => {
        event.preventDefault();
        apply(drillUpTo(model!, history!.current, side, entry.nodeId));
      };
      container.appendChild(link);
      if (index < all.length - 1) {
        container.appendChild(document.createTextNode(" › "));
      }
    });
  }
}

function renderLegend(state: ExplorationState, side: Side, containerId: string): void {
  const container = el(containerId);
  container.textContent = "";
  for (const entry of legendEntries(model!, state, side)) {
    const item = document.createElement("li");
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = entry.color;
    item.appendChild(swatch);
    item.appendChild(document.createTextNode(
      ` cluster ${entry.nodeId} (${entry.size})${entry.isLeaf ? "" : " ⊕"}`));
    if (!entry.isLeaf) {
      item.classList.add("drillable");
      item.onclick = () => apply(drillDown(model!, history!.current, side, entry.nodeId));
    }
    container.appendChild(item);
  }
}

function renderLevelControls(state: ExplorationState): void {
  const trajectory = el<HTMLSelectElement>("trajectory-level");
  const segment = el<HTMLSelectElement>("segment-level");
  const fill = (select: HTMLSelectElement, max: number, active: number) => {
    select.textContent = "";
    for (let level = 1; level <= max; level += 1) {
      const option = document.createElement("option");
      option.value = String(level);
      option.textContent = `level ${level}`;
      option.selected = level === active;
      select.appendChild(option);
    }
  };
  fill(trajectory, model!.trajectoryHierarchy.maxLevel, state.trajectoryLevel);
  fill(segment, model!.segmentHierarchy.maxLevel, state.segmentLevel);
}

function renderDetail(state: ExplorationState): void {
  const detail = cellDetail(model!, state);
  const panel = el("cell-detail");
  if (!detail) {
    panel.textContent = "select a crossed-matrix cell";
    return;
  }
  panel.textContent =
    `trajectory cluster ${detail.trajectoryNode} × segment cluster ` +
    `${detail.segmentNode}: ${detail.count} crossings, density ` +
    `${detail.density.toFixed(3)} (${detail.trajectoryIds.length} trajectories ` +
    `over ${detail.segmentIds.length} segments)`;
}

function boot(): void {
  el<HTMLInputElement>("bundle-file").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const text = await file.text();
    const result = loadBundle(text);
    const errors = el("errors");
    errors.textContent = "";
    if (!result.ok) {
      const list = document.createElement("ul");
      for (const message of result.errors) {
        const item = document.createElement("li");
        item.textContent = message;
        list.appendChild(item);
      }
      errors.appendChild(list);
      return;
    }
    model = result.model;
    history = new StateHistory(initialState(model));
    redraw();
  });
  el<HTMLButtonElement>("back").addEventListener("click", () => {
    if (history) {
      history.back();
      redraw();
    }
  });
  el<HTMLButtonElement>("forward").addEventListener("click", () => {
    if (history) {
      history.forward();
      redraw();
    }
  });
  const onLevelChange = () => {
    if (!model || !history) return;
    const trajectoryLevel = Number(el<HTMLSelectElement>("trajectory-level").value);
    const segmentLevel = Number(el<HTMLSelectElement>("segment-level").value);
    apply(setLevelPair(model, history.current, trajectoryLevel, segmentLevel));
  };
  el<HTMLSelectElement>("trajectory-level").addEventListener("change", onLevelChange);
  el<HTMLSelectElement>("segment-level").addEventListener("change", onLevelChange);
}

boot();
