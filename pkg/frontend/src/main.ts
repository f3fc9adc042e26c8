/**
 * Browser entry: wires the WebSocket client, the orbit camera, pointer
 * input and the scene into the control-room page. Pointer drag on the
 * yellow cube commands the leader target; wheel moves it in depth; the G
 * key (or the button) toggles the gripper.
 */
import * as THREE from "three";

import {
  DEFAULT_CAMERA,
  dolly,
  eye,
  orbit,
  project,
  type OrbitCamera,
} from "./camera.js";
import { ControlClient, type ConnectionStatus } from "./client.js";
import { beginDrag, dragTarget, endDrag, wheelDepth, type DragState } from "./input.js";
import {
  setGripCommand,
  setTargetCommand,
  worldToLeader,
  type SessionInfo,
  type StateMessage,
  type Vec3,
} from "./protocol.js";
import { applyStale, applyState, buildScene } from "./scene.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const hud = document.getElementById("hud")!;
const banner = document.getElementById("banner")!;
const gripButton = document.getElementById("grip")! as HTMLButtonElement;

async function boot(): Promise<void> {
  const info = (await (await fetch("/config")).json()) as SessionInfo;
  const view = buildScene(info);
  const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
  const threeCam = new THREE.PerspectiveCamera(50, 16 / 9, 0.05, 50);
  threeCam.up.set(0, 0, 1);

  let cam: OrbitCamera = {
    ...DEFAULT_CAMERA,
    target: [...info.shoulder_origin] as Vec3,
  };
  let latest: StateMessage | null = null;
  let drag: DragState | null = null;
  let orbiting: { x: number; y: number } | null = null;
  let grip = false;
  let lastSent = 0;

  function resize(): void {
    const w = canvas.clientWidth || window.innerWidth;
    const h = canvas.clientHeight || window.innerHeight;
    renderer.setSize(w, h, false);
    cam = { ...cam, width: w, height: h };
    threeCam.aspect = w / h;
    threeCam.updateProjectionMatrix();
  }
  window.addEventListener("resize", resize);

  const wsUrl = `ws://${location.host}/ws`;
  const client = new ControlClient(wsUrl, {
    onState: (msg) => {
      latest = msg;
      applyState(view, msg);
      hud.textContent = [
        `t=${msg.t.toFixed(2)}s`,
        `trial ${msg.trial.id ?? "-"} ${msg.trial.condition ?? ""} block ${msg.trial.block ?? "-"}`,
        `pose ${msg.target.pose_id ?? "-"} phase ${msg.trial.phase ?? "-"}`,
        msg.trial.phase === "holding"
          ? `hold ${msg.target.hold_remaining.toFixed(1)}s`
          : "",
        `grab ${msg.grab.state}${msg.grab.point ? ":" + msg.grab.point : ""}`,
        `|F_s| ${Math.hypot(...msg.forces.f_s).toFixed(1)} N`,
        grip ? "GRIP CLOSED" : "grip open",
      ]
        .filter(Boolean)
        .join("  |  ");
    },
    onStatus: (status: ConnectionStatus) => {
      banner.textContent = status === "live" ? "" : status;
      banner.style.display = status === "live" ? "none" : "block";
      applyStale(view, status === "stale" || status === "closed");
    },
    onError: (frame) => {
      banner.textContent = `command rejected: ${frame.error}`;
      banner.style.display = "block";
      setTimeout(() => {
        banner.style.display = "none";
      }, 1500);
    },
  });
  client.connect();

  function sendTarget(world: Vec3): void {
    const now = performance.now();
    if (now - lastSent < 1000 / info.ui_rate) return; // human-rate throttle
    lastSent = now;
    client.send(setTargetCommand(worldToLeader(world, info.frame_map)));
  }

  function toggleGrip(): void {
    grip = !grip;
    client.send(setGripCommand(grip));
    gripButton.textContent = grip ? "release (G)" : "grab (G)";
  }

  canvas.addEventListener("pointerdown", (ev) => {
    if (latest === null) return;
    const hit = project(cam, latest.leader_mapped);
    const near =
      hit.visible &&
      Math.hypot(hit.x - ev.offsetX, hit.y - ev.offsetY) < 40;
    if (ev.button === 0 && near) {
      drag = beginDrag(cam, ev.offsetX, ev.offsetY, latest.leader_mapped);
      canvas.setPointerCapture(ev.pointerId);
    } else {
      orbiting = { x: ev.clientX, y: ev.clientY };
    }
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (drag?.active) {
      drag = dragTarget(cam, drag, ev.offsetX, ev.offsetY);
      sendTarget(drag.target);
    } else if (orbiting) {
      cam = orbit(
        cam,
        -(ev.clientX - orbiting.x) * 0.005,
        (ev.clientY - orbiting.y) * 0.005,
      );
      orbiting = { x: ev.clientX, y: ev.clientY };
    }
  });
  const stopDrag = () => {
    if (drag?.active) drag = endDrag(drag);
    orbiting = null;
  };
  canvas.addEventListener("pointerup", stopDrag);
  canvas.addEventListener("pointerleave", stopDrag);
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const steps = -Math.sign(ev.deltaY);
    if (drag?.active) {
      drag = wheelDepth(cam, drag, steps);
      sendTarget(drag.target);
    } else {
      cam = dolly(cam, ev.deltaY > 0 ? 1.1 : 0.9);
    }
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "g" || ev.key === "G") toggleGrip();
  });
  gripButton.addEventListener("click", toggleGrip);

  function frame(): void {
    threeCam.position.set(...eye(cam));
    threeCam.lookAt(...cam.target);
    threeCam.fov = (cam.fovY * 180) / Math.PI;
    threeCam.updateProjectionMatrix();
    renderer.render(view.scene, threeCam);
    requestAnimationFrame(frame);
  }
  resize();
  frame();
}

boot().catch((err) => {
  banner.textContent = `failed to start: ${err}`;
  banner.style.display = "block";
});
