// Entry point: socket lifecycle, keyboard steering, map clicks.

import { inImage, projectPoint, stepPose } from "./camera.js";
import { ClientMsg, detectionMsg, parseServerDoc, resetMsg, stepMsg } from "./protocol.js";
import { drawMap, fitViewport, fromCanvas, renderPanel, Viewport } from "./render.js";
import { AppState, initialState, onConnection, onLocalStep, onServerDoc } from "./state.js";

const FORWARD_STEP = 0.05; // map units per ArrowUp
const TURN_STEP_DEG = 15;
const RETRY_MS = 1000;
const CLICK_RADIUS_PX = 8;

const params = new URLSearchParams(location.search);
const serverUrl = params.get("server") ?? "ws://127.0.0.1:8474";

const canvas = document.getElementById("map") as HTMLCanvasElement;
let state: AppState = initialState();
let viewport: Viewport | null = null;
let socket: WebSocket | null = null;

function update(next: AppState): void {
  state = next;
  if (state.map && !viewport) {
    viewport = fitViewport(state.map.centers, canvas.width, canvas.height);
  }
  if (viewport) drawMap(canvas, state, viewport);
  renderPanel(document, state);
}

function send(msg: ClientMsg): void {
  if (socket && socket.readyState === WebSocket.OPEN) {
    socket.send(JSON.stringify(msg));
  }
}

function connect(): void {
  update(onConnection(state, "connecting"));
  socket = new WebSocket(serverUrl);
  socket.onopen = () => update(onConnection(state, "open"));
  socket.onmessage = (ev) => {
    const doc = parseServerDoc(String(ev.data));
    if (doc) update(onServerDoc(state, doc));
  };
  socket.onclose = () => {
    update(onConnection(state, "closed"));
    setTimeout(connect, RETRY_MS);
  };
}

function steer(forward: number, turnDeg: number): void {
  if (!state.camera) return;
  send(stepMsg(forward, turnDeg));
  update(onLocalStep(state, stepPose(state.camera, forward, turnDeg)));
}

document.addEventListener("keydown", (ev) => {
  switch (ev.key) {
    case "ArrowUp":
      steer(FORWARD_STEP, 0);
      break;
    case "ArrowLeft":
      steer(0, -TURN_STEP_DEG);
      break;
    case "ArrowRight":
      steer(0, TURN_STEP_DEG);
      break;
    case "r":
      viewport = null;
      send(resetMsg());
      break;
    default:
      return;
  }
  ev.preventDefault();
});

canvas.addEventListener("click", (ev) => {
  if (!state.map || !state.camera || !viewport) return;
  const rect = canvas.getBoundingClientRect();
  const [wx, wz] = fromCanvas(viewport, ev.clientX - rect.left, ev.clientY - rect.top);

  let best: [number, number, number] | null = null;
  let bestDist = Infinity;
  for (const point of state.map.points) {
    const d = Math.hypot(point[1] - wx, point[2] - wz);
    if (d < bestDist) {
      bestDist = d;
      best = point;
    }
  }
  if (!best || bestDist * viewport.scale > CLICK_RADIUS_PX) return;

  const projected = projectPoint(state.camera, best[1], best[2]);
  if (!projected || !inImage(projected)) {
    const err = document.getElementById("error");
    if (err) {
      err.hidden = false;
      err.textContent = `point #${best[0]} is not in the camera view`;
    }
    return;
  }
  send(detectionMsg("marked obstacle", [projected.u, projected.v]));
});

connect();
