// Wire format spoken by the guidance server. One JSON document per
// WebSocket text message, discriminated by "type".

export type Direction = "left" | "right" | "straight";

export interface HelloDoc {
  type: "hello";
  map_name: string;
  keyframes: number;
  map_points: number;
  scale_reference_cm: number;
  thresholds: { deviation_cm: number; obstacle_cm: number };
}

export interface MapDoc {
  type: "map";
  keyframe_centers: [number, number][]; // planar [x, z]
  map_points: [number, number, number][]; // [id, x, z]
  obstacle_ids: number[];
}

export interface ObstacleDoc {
  point_id: number;
  class_name: string;
  distance_cm: number;
  alert: boolean;
}

export interface GuidanceDoc {
  type: "guidance";
  frame: number;
  localized: boolean;
  direction: Direction;
  deviation_cm: number;
  deviation_alert: boolean;
  obstacles: ObstacleDoc[];
  messages: string[];
}

export interface ErrorDoc {
  type: "error";
  code: string;
  detail: string;
}

export type ServerDoc = HelloDoc | MapDoc | GuidanceDoc | ErrorDoc;

export type ClientMsg =
  | { type: "pose"; x: number; y: number; z: number }
  | { type: "step"; forward: number; turn_deg: number }
  | {
      type: "inject_detection";
      class_name: string;
      bbox_center: [number, number];
      bbox_size: [number, number];
      confidence: number;
    }
  | { type: "reset" };

function isNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isPair(v: unknown): v is [number, number] {
  return Array.isArray(v) && v.length === 2 && v.every(isNumber);
}

function isTriple(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 && v.every(isNumber);
}

function isObstacle(v: unknown): v is ObstacleDoc {
  if (typeof v !== "object" || v === null) return false;
  const o = v as Record<string, unknown>;
  return (
    isNumber(o.point_id) &&
    typeof o.class_name === "string" &&
    isNumber(o.distance_cm) &&
    typeof o.alert === "boolean"
  );
}

/** Parse one server message; null for anything that is not a known document. */
export function parseServerDoc(text: string): ServerDoc | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const doc = raw as Record<string, unknown>;

  switch (doc.type) {
    case "hello": {
      const t = doc.thresholds as Record<string, unknown> | undefined;
      if (
        typeof doc.map_name === "string" &&
        isNumber(doc.keyframes) &&
        isNumber(doc.map_points) &&
        isNumber(doc.scale_reference_cm) &&
        t !== undefined &&
        isNumber(t.deviation_cm) &&
        isNumber(t.obstacle_cm)
      ) {
        return doc as unknown as HelloDoc;
      }
      return null;
    }
    case "map":
      if (
        Array.isArray(doc.keyframe_centers) &&
        doc.keyframe_centers.every(isPair) &&
        Array.isArray(doc.map_points) &&
        doc.map_points.every(isTriple) &&
        Array.isArray(doc.obstacle_ids) &&
        doc.obstacle_ids.every(isNumber)
      ) {
        return doc as unknown as MapDoc;
      }
      return null;
    case "guidance":
      if (
        isNumber(doc.frame) &&
        typeof doc.localized === "boolean" &&
        (doc.direction === "left" || doc.direction === "right" || doc.direction === "straight") &&
        isNumber(doc.deviation_cm) &&
        typeof doc.deviation_alert === "boolean" &&
        Array.isArray(doc.obstacles) &&
        doc.obstacles.every(isObstacle) &&
        Array.isArray(doc.messages) &&
        doc.messages.every((m) => typeof m === "string")
      ) {
        return doc as unknown as GuidanceDoc;
      }
      return null;
    case "error":
      if (typeof doc.code === "string" && typeof doc.detail === "string") {
        return doc as unknown as ErrorDoc;
      }
      return null;
    default:
      return null;
  }
}

export const poseMsg = (x: number, y: number, z: number): ClientMsg => ({
  type: "pose",
  x,
  y,
  z,
});

export const stepMsg = (forward: number, turnDeg: number): ClientMsg => ({
  type: "step",
  forward,
  turn_deg: turnDeg,
});

export const resetMsg = (): ClientMsg => ({ type: "reset" });

export function detectionMsg(
  className: string,
  center: [number, number],
  size: [number, number] = [24, 24],
  confidence = 0.9,
): ClientMsg {
  return {
    type: "inject_detection",
    class_name: className,
    bbox_center: center,
    bbox_size: size,
    confidence,
  };
}
