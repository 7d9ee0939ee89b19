// Pure view-model state. Everything here is driven either by a parsed
// server document or by a locally issued steering command; render.ts
// only reads it.

import { CameraPose, startPose } from "./camera.js";
import { GuidanceDoc, HelloDoc, MapDoc, ServerDoc } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface MapState {
  centers: [number, number][];
  points: [number, number, number][];
  obstacleIds: Set<number>;
}

export interface AppState {
  connection: ConnectionStatus;
  hello: HelloDoc | null;
  map: MapState | null;
  guidance: GuidanceDoc | null;
  camera: CameraPose | null;
  lastError: string | null;
}

export function initialState(): AppState {
  return {
    connection: "connecting",
    hello: null,
    map: null,
    guidance: null,
    camera: null,
    lastError: null,
  };
}

export function onConnection(state: AppState, status: ConnectionStatus): AppState {
  return { ...state, connection: status };
}

function onMap(state: AppState, doc: MapDoc): AppState {
  const map: MapState = {
    centers: doc.keyframe_centers,
    points: doc.map_points,
    obstacleIds: new Set(doc.obstacle_ids),
  };
  // a map document means a fresh session (connect or reset): the camera
  // is back at the path start and stale guidance must not linger
  return {
    ...state,
    map,
    guidance: null,
    camera: doc.keyframe_centers.length >= 2 ? startPose(doc.keyframe_centers) : null,
  };
}

function onGuidance(state: AppState, doc: GuidanceDoc): AppState {
  let map = state.map;
  if (map) {
    const ids = new Set(map.obstacleIds);
    for (const o of doc.obstacles) ids.add(o.point_id);
    map = { ...map, obstacleIds: ids };
  }
  return { ...state, map, guidance: doc, lastError: null };
}

export function onServerDoc(state: AppState, doc: ServerDoc): AppState {
  switch (doc.type) {
    case "hello":
      return { ...state, hello: doc };
    case "map":
      return onMap(state, doc);
    case "guidance":
      return onGuidance(state, doc);
    case "error":
      return { ...state, lastError: `${doc.code}: ${doc.detail}` };
  }
}

/** Record a locally issued step so the marker moves with the command. */
export function onLocalStep(state: AppState, pose: CameraPose): AppState {
  return { ...state, camera: pose };
}
