// Client-side mirror of the server's virtual camera. The server owns the
// authoritative pose; this module repeats the same integration so the
// viewer can draw the camera marker without waiting for an echo, and
// projects world points into the synthetic image so a map click can be
// turned into a detection box at the right pixel.

// Fixed synthetic pinhole camera, identical to the server's.
export const FX = 500;
export const FY = 500;
export const CX = 320;
export const CY = 240;
export const IMAGE_WIDTH = 640;
export const IMAGE_HEIGHT = 480;

export interface CameraPose {
  x: number;
  y: number;
  z: number;
  heading: number; // radians, 0 faces +Z, positive turns toward +X
}

/** Start pose: on the first keyframe center, facing the second. */
export function startPose(centers: [number, number][]): CameraPose {
  const [x0, z0] = centers[0];
  const [x1, z1] = centers[1];
  return { x: x0, y: 0, z: z0, heading: Math.atan2(x1 - x0, z1 - z0) };
}

/** Turn first, then advance along the new heading (server order). */
export function stepPose(pose: CameraPose, forward: number, turnDeg: number): CameraPose {
  const heading = pose.heading + (turnDeg * Math.PI) / 180;
  return {
    x: pose.x + forward * Math.sin(heading),
    y: pose.y,
    z: pose.z + forward * Math.cos(heading),
    heading,
  };
}

export interface Projected {
  u: number;
  v: number;
  depth: number;
}

/** Pixel for a world point, or null when it is at/behind the camera plane. */
export function projectPoint(pose: CameraPose, px: number, pz: number, py = 0): Projected | null {
  const dx = px - pose.x;
  const dy = py - pose.y;
  const dz = pz - pose.z;
  const cos = Math.cos(pose.heading);
  const sin = Math.sin(pose.heading);
  const xCam = cos * dx - sin * dz;
  const zCam = sin * dx + cos * dz;
  if (zCam <= 1e-9) return null;
  return {
    u: FX * (xCam / zCam) + CX,
    v: FY * (dy / zCam) + CY,
    depth: zCam,
  };
}

export function inImage(p: Projected): boolean {
  return p.u >= 0 && p.u < IMAGE_WIDTH && p.v >= 0 && p.v < IMAGE_HEIGHT;
}
