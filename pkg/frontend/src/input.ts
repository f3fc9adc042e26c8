/**
 * Pointer-to-leader-target mapping.
 *
 * Dragging translates the commanded leader target in a camera-parallel
 * plane at the proxy cube's current depth; the wheel moves it along the
 * camera forward axis. Grabbing the cube anchors the drag so the target
 * never jumps: the pointer-to-cube screen offset at drag start is carried
 * through the whole drag.
 */
import {
  degenerate,
  project,
  unproject,
  basis,
  type OrbitCamera,
} from "./camera.js";
import type { Vec3 } from "./protocol.js";

export interface DragState {
  active: boolean;
  /** screen-space offset from the pointer to the projected cube at start */
  offsetX: number;
  offsetY: number;
  /** working depth of the camera-parallel drag plane, m */
  depth: number;
  /** latest commanded target, world frame */
  target: Vec3;
}

export function beginDrag(
  cam: OrbitCamera,
  pointerX: number,
  pointerY: number,
  cubeWorld: Vec3,
): DragState | null {
  if (degenerate(cam)) return null;
  const p = project(cam, cubeWorld);
  if (!p.visible) return null;
  return {
    active: true,
    offsetX: p.x - pointerX,
    offsetY: p.y - pointerY,
    depth: p.depth,
    target: cubeWorld,
  };
}

/** New world-frame target for the current pointer position. */
export function dragTarget(
  cam: OrbitCamera,
  drag: DragState,
  pointerX: number,
  pointerY: number,
): DragState {
  if (degenerate(cam)) return drag;
  const target = unproject(
    cam,
    pointerX + drag.offsetX,
    pointerY + drag.offsetY,
    drag.depth,
  );
  return { ...drag, target };
}

/** Wheel input: translate the target along the camera forward axis only. */
export function wheelDepth(
  cam: OrbitCamera,
  drag: DragState,
  deltaSteps: number,
  metersPerStep = 0.02,
): DragState {
  if (degenerate(cam)) return drag;
  const { forward } = basis(cam);
  const d = deltaSteps * metersPerStep;
  const target: Vec3 = [
    drag.target[0] + forward[0] * d,
    drag.target[1] + forward[1] * d,
    drag.target[2] + forward[2] * d,
  ];
  return { ...drag, depth: drag.depth + d, target };
}

export function endDrag(drag: DragState): DragState {
  return { ...drag, active: false };
}
