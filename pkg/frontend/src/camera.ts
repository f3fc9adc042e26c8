/**
 * Orbitable pinhole camera as a plain value, with project/unproject math
 * kept free of rendering dependencies so it is testable headless. The
 * renderer mirrors this state into its own camera each frame.
 */
import type { Vec3 } from "./protocol.js";

export interface OrbitCamera {
  target: Vec3;       // look-at point, world frame
  azimuth: number;    // rad, around +z
  elevation: number;  // rad, 0 = horizontal, +up
  distance: number;   // m
  fovY: number;       // rad
  width: number;      // px
  height: number;     // px
}

export const DEFAULT_CAMERA: OrbitCamera = {
  target: [0.45, 0.0, 1.0],
  azimuth: Math.PI, // looking back toward +x
  elevation: 0.25,
  distance: 1.6,
  fovY: (50 * Math.PI) / 180,
  width: 1280,
  height: 720,
};

const add = (a: Vec3, b: Vec3): Vec3 => [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
const sub = (a: Vec3, b: Vec3): Vec3 => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
const scale = (a: Vec3, k: number): Vec3 => [a[0] * k, a[1] * k, a[2] * k];
const dot = (a: Vec3, b: Vec3): number => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
const cross = (a: Vec3, b: Vec3): Vec3 => [
  a[1] * b[2] - a[2] * b[1],
  a[2] * b[0] - a[0] * b[2],
  a[0] * b[1] - a[1] * b[0],
];
const norm = (a: Vec3): number => Math.sqrt(dot(a, a));
const normalize = (a: Vec3): Vec3 => scale(a, 1 / norm(a));

export function eye(cam: OrbitCamera): Vec3 {
  const ce = Math.cos(cam.elevation);
  const offset: Vec3 = [
    ce * Math.cos(cam.azimuth),
    ce * Math.sin(cam.azimuth),
    Math.sin(cam.elevation),
  ];
  return add(cam.target, scale(offset, cam.distance));
}

export interface CameraBasis {
  forward: Vec3; // toward the target
  right: Vec3;
  up: Vec3;
}

export function basis(cam: OrbitCamera): CameraBasis {
  const forward = normalize(sub(cam.target, eye(cam)));
  const worldUp: Vec3 = [0, 0, 1];
  const right = normalize(cross(forward, worldUp));
  const up = cross(right, forward);
  return { forward, right, up };
}

function focalPx(cam: OrbitCamera): number {
  return cam.height / 2 / Math.tan(cam.fovY / 2);
}

export interface Projected {
  x: number; // px from the left
  y: number; // px from the top
  depth: number; // m along the camera forward axis
  visible: boolean;
}

export function project(cam: OrbitCamera, world: Vec3): Projected {
  const b = basis(cam);
  const rel = sub(world, eye(cam));
  const depth = dot(rel, b.forward);
  if (depth <= 1e-9) {
    return { x: NaN, y: NaN, depth, visible: false };
  }
  const f = focalPx(cam);
  const x = cam.width / 2 + (f * dot(rel, b.right)) / depth;
  const y = cam.height / 2 - (f * dot(rel, b.up)) / depth;
  return { x, y, depth, visible: true };
}

/** Inverse of project at a fixed depth along the forward axis. */
export function unproject(
  cam: OrbitCamera,
  xPx: number,
  yPx: number,
  depth: number,
): Vec3 {
  const b = basis(cam);
  const f = focalPx(cam);
  const rx = ((xPx - cam.width / 2) * depth) / f;
  const ry = ((cam.height / 2 - yPx) * depth) / f;
  return add(
    eye(cam),
    add(scale(b.forward, depth), add(scale(b.right, rx), scale(b.up, ry))),
  );
}

/** Meters of camera-parallel motion per pixel of drag at a given depth. */
export function metersPerPixel(cam: OrbitCamera, depth: number): number {
  return depth / focalPx(cam);
}

export function orbit(cam: OrbitCamera, dAz: number, dEl: number): OrbitCamera {
  const lim = Math.PI / 2 - 0.05;
  return {
    ...cam,
    azimuth: cam.azimuth + dAz,
    elevation: Math.min(lim, Math.max(-lim, cam.elevation + dEl)),
  };
}

export function dolly(cam: OrbitCamera, factor: number): OrbitCamera {
  return {
    ...cam,
    distance: Math.min(8, Math.max(0.3, cam.distance * factor)),
  };
}

export function degenerate(cam: OrbitCamera): boolean {
  return !(
    Number.isFinite(cam.distance) &&
    cam.distance > 0 &&
    cam.width > 0 &&
    cam.height > 0 &&
    cam.fovY > 0 &&
    cam.fovY < Math.PI
  );
}
