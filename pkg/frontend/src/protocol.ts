/**
 * Wire schema of the control-room WebSocket link and the static session
 * facts served at /config. State frames are versioned JSON; a version
 * mismatch must stop rendering rather than guess.
 */

export type Vec3 = [number, number, number];

export const SCHEMA_VERSION = 1;

export interface GrabInfo {
  state: "free" | "near" | "engaged";
  point: "elbow" | "wrist" | null;
}

export interface TargetInfo {
  pose_id: string | null;
  elbow: Vec3 | null;
  wrist: Vec3 | null;
  matched: boolean;
  hold_remaining: number;
}

export interface StateMessage {
  v: number;
  t: number;
  q: number[];
  elbow: Vec3;
  wrist: Vec3;
  leader_mapped: Vec3;
  leader: Vec3;
  grab: GrabInfo;
  marker_colors: { elbow: "red" | "green"; wrist: "red" | "green" };
  target: TargetInfo;
  forces: { f_s: Vec3; f_a: Vec3 };
  trial: {
    id: number | null;
    block: number | null;
    condition: string | null;
    phase: string | null;
  };
  replay?: boolean;
}

export interface ErrorFrame {
  v: number;
  error: string;
}

export interface FrameMapInfo {
  theta: number;
  c_scale: number;
  x_offset: Vec3;
  rotation_sign: 1 | -1;
}

export interface SessionInfo {
  v: number;
  frame_map: FrameMapInfo;
  workspace: { diameter: number; height: number };
  shoulder_origin: Vec3;
  grab_radius: number;
  ui_rate: number;
  leader_source: string;
}

export class SchemaError extends Error {}

function isVec3(x: unknown): x is Vec3 {
  return (
    Array.isArray(x) && x.length === 3 && x.every((v) => Number.isFinite(v))
  );
}

/** Parse one incoming frame; error frames come back as-is. */
export function parseFrame(raw: string): StateMessage | ErrorFrame {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new SchemaError("frame is not JSON");
  }
  if (typeof data !== "object" || data === null) {
    throw new SchemaError("frame is not an object");
  }
  const obj = data as Record<string, unknown>;
  if (obj.v !== SCHEMA_VERSION) {
    throw new SchemaError(`schema version ${String(obj.v)} unsupported`);
  }
  if (typeof obj.error === "string") {
    return { v: SCHEMA_VERSION, error: obj.error };
  }
  if (
    typeof obj.t !== "number" ||
    !isVec3(obj.elbow) ||
    !isVec3(obj.wrist) ||
    !isVec3(obj.leader_mapped) ||
    typeof obj.grab !== "object" ||
    typeof obj.marker_colors !== "object" ||
    typeof obj.target !== "object"
  ) {
    throw new SchemaError("state frame is missing required fields");
  }
  return obj as unknown as StateMessage;
}

export function isErrorFrame(
  frame: StateMessage | ErrorFrame,
): frame is ErrorFrame {
  return "error" in frame;
}

export function setTargetCommand(pos: Vec3): string {
  return JSON.stringify({ kind: "set_target", pos });
}

export function setGripCommand(closed: boolean): string {
  return JSON.stringify({ kind: "set_grip", closed });
}

export function sessionControlCommand(
  action: "start" | "pause" | "next_trial",
): string {
  return JSON.stringify({ kind: "session_control", action });
}

/** Follower/world frame -> leader device frame (inverse of the overlay). */
export function worldToLeader(p: Vec3, fm: FrameMapInfo): Vec3 {
  const a = fm.rotation_sign * fm.theta;
  const c = Math.cos(a);
  const s = Math.sin(a);
  const x = (p[0] - fm.x_offset[0]) / fm.c_scale;
  const y = (p[1] - fm.x_offset[1]) / fm.c_scale;
  const z = (p[2] - fm.x_offset[2]) / fm.c_scale;
  return [c * x + s * y, -s * x + c * y, z];
}

/** Leader device frame -> follower/world frame. */
export function leaderToWorld(p: Vec3, fm: FrameMapInfo): Vec3 {
  const a = fm.rotation_sign * fm.theta;
  const c = Math.cos(a);
  const s = Math.sin(a);
  return [
    (c * p[0] - s * p[1]) * fm.c_scale + fm.x_offset[0],
    (s * p[0] + c * p[1]) * fm.c_scale + fm.x_offset[1],
    p[2] * fm.c_scale + fm.x_offset[2],
  ];
}
