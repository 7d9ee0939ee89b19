// Top-down map view plus the guidance side panel. Pure DOM/canvas
// output; no state is kept here beyond the world-to-canvas transform
// computed per frame.

import { AppState } from "./state.js";

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit the map's bounding box into the canvas with padding. +Z is up. */
export function fitViewport(
  centers: [number, number][],
  width: number,
  height: number,
  padding = 30,
): Viewport {
  let minX = Infinity,
    maxX = -Infinity,
    minZ = Infinity,
    maxZ = -Infinity;
  for (const [x, z] of centers) {
    minX = Math.min(minX, x);
    maxX = Math.max(maxX, x);
    minZ = Math.min(minZ, z);
    maxZ = Math.max(maxZ, z);
  }
  const spanX = Math.max(maxX - minX, 1e-6);
  const spanZ = Math.max(maxZ - minZ, 1e-6);
  const scale = Math.min((width - 2 * padding) / spanX, (height - 2 * padding) / spanZ);
  return {
    scale,
    offsetX: padding - minX * scale + (width - 2 * padding - spanX * scale) / 2,
    offsetY: height - padding + minZ * scale - (height - 2 * padding - spanZ * scale) / 2,
  };
}

export function toCanvas(v: Viewport, x: number, z: number): [number, number] {
  return [x * v.scale + v.offsetX, v.offsetY - z * v.scale];
}

export function fromCanvas(v: Viewport, cx: number, cy: number): [number, number] {
  return [(cx - v.offsetX) / v.scale, (v.offsetY - cy) / v.scale];
}

const DIRECTION_ARROWS: Record<string, string> = {
  left: "← go left",
  right: "go right →",
  straight: "↑ go straight",
};

export function drawMap(canvas: HTMLCanvasElement, state: AppState, viewport: Viewport): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || !state.map) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  // map points first so the path stays readable on top of them
  for (const [id, x, z] of state.map.points) {
    const [cx, cy] = toCanvas(viewport, x, z);
    ctx.fillStyle = state.map.obstacleIds.has(id) ? "#e05555" : "#3c4a5a";
    const r = state.map.obstacleIds.has(id) ? 4 : 1.5;
    ctx.beginPath();
    ctx.arc(cx, cy, r, 0, 2 * Math.PI);
    ctx.fill();
  }

  ctx.strokeStyle = "#5fa8e0";
  ctx.lineWidth = 2;
  ctx.beginPath();
  state.map.centers.forEach(([x, z], i) => {
    const [cx, cy] = toCanvas(viewport, x, z);
    if (i === 0) ctx.moveTo(cx, cy);
    else ctx.lineTo(cx, cy);
  });
  ctx.stroke();

  if (state.camera) {
    const { x, z, heading } = state.camera;
    const [cx, cy] = toCanvas(viewport, x, z);
    // canvas y grows downward, so world heading 0 (+Z) points up
    const a = heading;
    ctx.fillStyle = state.guidance?.deviation_alert ? "#e05555" : "#7ee07e";
    ctx.beginPath();
    ctx.moveTo(cx + 10 * Math.sin(a), cy - 10 * Math.cos(a));
    ctx.lineTo(cx + 6 * Math.sin(a + 2.5), cy - 6 * Math.cos(a + 2.5));
    ctx.lineTo(cx + 6 * Math.sin(a - 2.5), cy - 6 * Math.cos(a - 2.5));
    ctx.closePath();
    ctx.fill();
  }
}

export function renderPanel(root: Document, state: AppState): void {
  const el = (id: string) => root.getElementById(id);

  const banner = el("banner");
  if (banner) {
    banner.hidden = state.connection === "open";
    banner.textContent =
      state.connection === "closed" ? "disconnected, retrying..." : "connecting...";
  }

  const hello = el("map-info");
  if (hello && state.hello) {
    hello.textContent =
      `${state.hello.map_name} · ${state.hello.keyframes} keyframes · ` +
      `${state.hello.map_points} points · 0.1 units = ${state.hello.scale_reference_cm} cm`;
  }

  const direction = el("direction");
  if (direction) {
    const dir = state.guidance?.localized ? state.guidance.direction : null;
    direction.textContent = dir ? DIRECTION_ARROWS[dir] : "—";
    direction.className = dir ?? "";
  }

  const deviation = el("deviation");
  const meter = el("deviation-fill") as HTMLElement | null;
  if (deviation && state.guidance) {
    deviation.textContent = `${state.guidance.deviation_cm.toFixed(1)} cm`;
    deviation.classList.toggle("alert", state.guidance.deviation_alert);
  }
  if (meter && state.guidance && state.hello) {
    // the meter spans twice the threshold so the limit line sits mid-bar
    const limit = state.hello.thresholds.deviation_cm;
    const frac = Math.min(state.guidance.deviation_cm / (2 * limit), 1);
    meter.style.width = `${(frac * 100).toFixed(1)}%`;
    meter.classList.toggle("alert", state.guidance.deviation_alert);
  }

  const obstacles = el("obstacles");
  if (obstacles) {
    obstacles.textContent = "";
    for (const o of state.guidance?.obstacles ?? []) {
      const li = root.createElement("li");
      li.textContent = `${o.class_name} #${o.point_id}: ${o.distance_cm.toFixed(1)} cm`;
      if (o.alert) li.className = "alert";
      obstacles.appendChild(li);
    }
  }

  const messages = el("messages");
  if (messages) {
    messages.textContent = (state.guidance?.messages ?? []).join("\n");
  }

  const err = el("error");
  if (err) {
    err.hidden = !state.lastError;
    err.textContent = state.lastError ?? "";
  }
}
