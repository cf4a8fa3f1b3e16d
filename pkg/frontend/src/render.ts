/** Canvas + DOM painting of the view-model. Kept free of exploration logic. */

import { BundleModel } from "./model.js";
import { ExplorationState } from "./state.js";
import {
  activeMatrix, cellDetail, MapLine, segmentMapView, shadeOf,
  trajectoryOverlay,
} from "./view.js";

interface Transform {
  scale: number;
  offsetX: number;
  offsetY: number;
  height: number;
}

function fitTransform(
  bounds: { minX: number; minY: number; maxX: number; maxY: number },
  width: number,
  height: number,
): Transform {
  const spanX = Math.max(bounds.maxX - bounds.minX, 1e-9);
  const spanY = Math.max(bounds.maxY - bounds.minY, 1e-9);
  const scale = 0.92 * Math.min(width / spanX, height / spanY); // uniform
  return {
    scale,
    offsetX: (width - spanX * scale) / 2 - bounds.minX * scale,
    offsetY: (height - spanY * scale) / 2 - bounds.minY * scale,
    height,
  };
}

function drawLines(
  ctx: CanvasRenderingContext2D,
  lines: MapLine[],
  transform: Transform,
  color: string,
  width: number,
): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  for (const line of lines) {
    ctx.moveTo(line.x1 * transform.scale + transform.offsetX,
               transform.height - (line.y1 * transform.scale + transform.offsetY));
    ctx.lineTo(line.x2 * transform.scale + transform.offsetX,
               transform.height - (line.y2 * transform.scale + transform.offsetY));
  }
  ctx.stroke();
}

export function renderMap(
  canvas: HTMLCanvasElement,
  model: BundleModel,
  state: ExplorationState,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const view = segmentMapView(model, state);
  const transform = fitTransform(view.bounds, canvas.width, canvas.height);
  drawLines(ctx, view.background, transform, "#dddddd", 1);
  for (const klass of view.classes) {
    drawLines(ctx, klass.lines, transform, klass.color, 2.2);
  }
  const detail = cellDetail(model, state);
  if (detail) {
    drawLines(
      ctx,
      detail.segmentIds.map((sid) => {
        const segment = model.segmentsById.get(sid)!;
        const a = model.nodesById.get(segment.from)!;
        const b = model.nodesById.get(segment.to)!;
        return { x1: a.x, y1: a.y, x2: b.x, y2: b.y };
      }),
      transform,
      "#111111",
      4,
    );
    for (const polyline of trajectoryOverlay(model, detail.trajectoryIds)) {
      drawLines(ctx, polyline, transform, "rgba(214,39,40,0.55)", 2.5);
    }
  }
}

export function renderMatrix(
  container: HTMLElement,
  model: BundleModel,
  state: ExplorationState,
  onCell: (row: number, col: number) => void,
): void {
  container.textContent = "";
  const matrix = activeMatrix(model, state);
  if (!matrix) {
    container.textContent = "no crossed matrix at this level pair";
    return;
  }
  const table = document.createElement("table");
  table.className = "crossed";
  const head = table.createTHead().insertRow();
  head.insertCell().textContent = "traj \\ seg";
  for (const col of matrix.cols) {
    const cell = head.insertCell();
    cell.textContent = String(col);
  }
  const body = table.createTBody();
  matrix.rows.forEach((rowId, r) => {
    const tr = body.insertRow();
    tr.insertCell().textContent = String(rowId);
    matrix.cols.forEach((_colId, c) => {
      const cell = tr.insertCell();
      const density = matrix.densities[r]![c]!;
      cell.style.background = shadeOf(density);
      cell.title = `count ${matrix.counts[r]![c]}, density ${density.toFixed(3)}`;
      cell.addEventListener("click", () => onCell(r, c));
      if (state.highlighted && state.highlighted.row === r && state.highlighted.col === c) {
        cell.classList.add("selected");
      }
    });
  });
  container.appendChild(table);
}
