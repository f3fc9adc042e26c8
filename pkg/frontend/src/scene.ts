/**
 * Scene graph of the control room: the follower arm, red/green graspable
 * markers, the yellow proxy cube, the light-blue target ghost arm, and
 * force arrows. Pure scene-object manipulation (no renderer), so state
 * application is testable headless.
 */
import * as THREE from "three";

import type { SessionInfo, StateMessage, Vec3 } from "./protocol.js";

const COLOR_RED = 0xcc2222;
const COLOR_GREEN = 0x22bb33;
const COLOR_GHOST = 0x9fd0ff; // light blue
const COLOR_GHOST_MATCHED = 0x22bb33;
const COLOR_CUBE = 0xf2c94c; // yellow
const COLOR_ARM = 0x8a8f98;

function segment(
  radius: number,
  color: number,
  opacity = 1.0,
): THREE.Mesh {
  const geom = new THREE.CylinderGeometry(radius, radius, 1.0, 12);
  const mat = new THREE.MeshStandardMaterial({
    color,
    transparent: opacity < 1.0,
    opacity,
  });
  return new THREE.Mesh(geom, mat);
}

/** Place a unit cylinder between two points. */
export function alignSegment(mesh: THREE.Mesh, a: Vec3, b: Vec3): void {
  const from = new THREE.Vector3(...a);
  const to = new THREE.Vector3(...b);
  const dir = to.clone().sub(from);
  const length = Math.max(dir.length(), 1e-6);
  mesh.position.copy(from.clone().add(to).multiplyScalar(0.5));
  mesh.quaternion.setFromUnitVectors(
    new THREE.Vector3(0, 1, 0),
    dir.normalize(),
  );
  mesh.scale.set(1, length, 1);
}

export interface ControlRoomScene {
  scene: THREE.Scene;
  upperArm: THREE.Mesh;
  forearm: THREE.Mesh;
  elbowMarker: THREE.Mesh;
  wristMarker: THREE.Mesh;
  cube: THREE.Mesh;
  ghostUpper: THREE.Mesh;
  ghostFore: THREE.Mesh;
  ghostElbow: THREE.Mesh;
  ghostWrist: THREE.Mesh;
  forceArrowA: THREE.ArrowHelper;
  forceArrowS: THREE.ArrowHelper;
  staleVeil: THREE.Mesh;
  shoulder: Vec3;
}

export function buildScene(info: SessionInfo): ControlRoomScene {
  const scene = new THREE.Scene();
  scene.background = new THREE.Color(0x10131a);
  scene.add(new THREE.AmbientLight(0xffffff, 0.7));
  const key = new THREE.DirectionalLight(0xffffff, 1.2);
  key.position.set(1, -1, 2);
  scene.add(key);

  const grid = new THREE.GridHelper(2.0, 20, 0x334, 0x223);
  grid.rotation.x = Math.PI / 2; // +z is up in the world frame
  grid.position.set(0.4, 0, 0.4);
  scene.add(grid);

  const upperArm = segment(0.035, COLOR_ARM);
  const forearm = segment(0.03, COLOR_ARM);
  const markerGeom = new THREE.SphereGeometry(0.045, 20, 14);
  const elbowMarker = new THREE.Mesh(
    markerGeom,
    new THREE.MeshStandardMaterial({ color: COLOR_RED }),
  );
  const wristMarker = new THREE.Mesh(
    markerGeom.clone(),
    new THREE.MeshStandardMaterial({ color: COLOR_RED }),
  );
  const cube = new THREE.Mesh(
    new THREE.BoxGeometry(0.05, 0.05, 0.05),
    new THREE.MeshStandardMaterial({ color: COLOR_CUBE }),
  );

  const ghostUpper = segment(0.03, COLOR_GHOST, 0.45);
  const ghostFore = segment(0.025, COLOR_GHOST, 0.45);
  const ghostGeom = new THREE.SphereGeometry(0.05, 16, 12);
  const ghostMat = new THREE.MeshStandardMaterial({
    color: COLOR_GHOST,
    transparent: true,
    opacity: 0.45,
  });
  const ghostElbow = new THREE.Mesh(ghostGeom, ghostMat);
  const ghostWrist = new THREE.Mesh(ghostGeom.clone(), ghostMat.clone());

  const forceArrowA = new THREE.ArrowHelper(
    new THREE.Vector3(1, 0, 0),
    new THREE.Vector3(),
    0.1,
    0xff8844,
  );
  const forceArrowS = new THREE.ArrowHelper(
    new THREE.Vector3(1, 0, 0),
    new THREE.Vector3(),
    0.1,
    0x44aaff,
  );

  const staleVeil = new THREE.Mesh(
    new THREE.PlaneGeometry(100, 100),
    new THREE.MeshBasicMaterial({
      color: 0x222222,
      transparent: true,
      opacity: 0.6,
      depthTest: false,
    }),
  );
  staleVeil.visible = false;
  staleVeil.renderOrder = 999;

  scene.add(upperArm, forearm, elbowMarker, wristMarker, cube);
  scene.add(ghostUpper, ghostFore, ghostElbow, ghostWrist);
  scene.add(forceArrowA, forceArrowS, staleVeil);

  return {
    scene,
    upperArm,
    forearm,
    elbowMarker,
    wristMarker,
    cube,
    ghostUpper,
    ghostFore,
    ghostElbow,
    ghostWrist,
    forceArrowA,
    forceArrowS,
    staleVeil,
    shoulder: info.shoulder_origin,
  };
}

const FORCE_SCALE = 0.02; // meters of arrow per newton

function applyForceArrow(
  arrow: THREE.ArrowHelper,
  origin: Vec3,
  force: Vec3,
): void {
  const mag = Math.hypot(force[0], force[1], force[2]);
  if (mag < 1e-3) {
    arrow.visible = false;
    return;
  }
  arrow.visible = true;
  arrow.position.set(...origin);
  arrow.setDirection(
    new THREE.Vector3(force[0] / mag, force[1] / mag, force[2] / mag),
  );
  arrow.setLength(Math.min(mag * FORCE_SCALE, 0.6), 0.03, 0.02);
}

/** Mirror one state frame into the scene graph. */
export function applyState(view: ControlRoomScene, msg: StateMessage): void {
  alignSegment(view.upperArm, view.shoulder, msg.elbow);
  alignSegment(view.forearm, msg.elbow, msg.wrist);
  view.elbowMarker.position.set(...msg.elbow);
  view.wristMarker.position.set(...msg.wrist);
  (view.elbowMarker.material as THREE.MeshStandardMaterial).color.setHex(
    msg.marker_colors.elbow === "green" ? COLOR_GREEN : COLOR_RED,
  );
  (view.wristMarker.material as THREE.MeshStandardMaterial).color.setHex(
    msg.marker_colors.wrist === "green" ? COLOR_GREEN : COLOR_RED,
  );
  view.cube.position.set(...msg.leader_mapped);

  const target = msg.target;
  const hasTarget = target.elbow !== null && target.wrist !== null;
  for (const obj of [
    view.ghostUpper,
    view.ghostFore,
    view.ghostElbow,
    view.ghostWrist,
  ]) {
    obj.visible = hasTarget;
  }
  if (hasTarget) {
    alignSegment(view.ghostUpper, view.shoulder, target.elbow!);
    alignSegment(view.ghostFore, target.elbow!, target.wrist!);
    view.ghostElbow.position.set(...target.elbow!);
    view.ghostWrist.position.set(...target.wrist!);
    const ghostColor = target.matched ? COLOR_GHOST_MATCHED : COLOR_GHOST;
    for (const mesh of [
      view.ghostUpper,
      view.ghostFore,
      view.ghostElbow,
      view.ghostWrist,
    ]) {
      (mesh.material as THREE.MeshStandardMaterial).color.setHex(ghostColor);
    }
  }

  const grabPoint =
    msg.grab.state === "engaged" && msg.grab.point !== null
      ? msg.grab.point === "elbow"
        ? msg.elbow
        : msg.wrist
      : null;
  applyForceArrow(view.forceArrowA, grabPoint ?? msg.wrist, msg.forces.f_a);
  if (grabPoint === null) view.forceArrowA.visible = false;
  applyForceArrow(view.forceArrowS, msg.leader_mapped, msg.forces.f_s);
}

export function applyStale(view: ControlRoomScene, stale: boolean): void {
  view.staleVeil.visible = stale;
}
