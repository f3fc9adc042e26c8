"""WebSocket bridge between the simulation loop and a browser control room.

State snapshots flow out as versioned JSON at the UI rate; commands flow
in (set_target / set_grip / session_control) with last-writer-wins
semantics and a rate limit. The bridge exchanges values with the
simulation thread through two single-slot mailboxes, so attaching or
detaching a client never perturbs a scripted session.

The JSON schema is documented in docs/ws-protocol.md.
"""
from __future__ import annotations

import asyncio
import json
import math
import threading
import time
from dataclasses import dataclass

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .coupling import CouplingState

SCHEMA_VERSION = 1
COMMAND_RATE_LIMIT = 200.0   # commands per second; beyond that, dropped


class CommandError(ValueError):
    """Malformed or unknown UI command."""


@dataclass
class UiCommand:
    kind: str
    target: tuple[float, float, float] | None = None
    grip: bool | None = None
    action: str | None = None


def parse_command(raw: str) -> UiCommand:
    """Validate one JSON command frame."""
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CommandError(f"bad json: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise CommandError("command must be an object")
    kind = data.get("kind")
    if kind == "set_target":
        pos = data.get("pos")
        if (not isinstance(pos, (list, tuple)) or len(pos) != 3
                or not all(isinstance(v, (int, float)) and math.isfinite(v)
                           for v in pos)):
            raise CommandError("set_target needs a finite 3-vector 'pos'")
        return UiCommand(kind="set_target", target=tuple(float(v) for v in pos))
    if kind == "set_grip":
        closed = data.get("closed")
        if not isinstance(closed, bool):
            raise CommandError("set_grip needs boolean 'closed'")
        return UiCommand(kind="set_grip", grip=closed)
    if kind == "session_control":
        action = data.get("action")
        if action not in ("start", "pause", "next_trial"):
            raise CommandError("unknown session_control action")
        return UiCommand(kind="session_control", action=action)
    raise CommandError(f"unknown command kind {kind!r}")


class BridgeHub:
    """Thread-safe mailboxes between the sim loop and connection handlers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._state: dict | None = None
        self._state_seq = 0
        self._target: tuple[float, float, float] | None = None
        self._grip = False
        self._paused = False
        self._skip = False
        self._cmd_times: list[float] = []
        self.dropped_commands = 0

    # sim side -------------------------------------------------------
    def publish(self, snapshot: dict) -> None:
        with self._lock:
            self._state = snapshot
            self._state_seq += 1

    def leader_input(self, _t: float):
        """(target, grip) consumed by the sim loop each tick."""
        with self._lock:
            return self._target, self._grip

    @property
    def paused(self) -> bool:
        with self._lock:
            return self._paused

    def take_skip(self) -> bool:
        """Pop a pending skip-to-next-trial request."""
        with self._lock:
            skip, self._skip = self._skip, False
            return skip

    # connection side --------------------------------------------------
    def state(self) -> tuple[int, dict | None]:
        with self._lock:
            return self._state_seq, self._state

    def apply(self, cmd: UiCommand) -> bool:
        """Apply one command; returns False when rate-limited."""
        now = time.monotonic()
        with self._lock:
            self._cmd_times = [t for t in self._cmd_times if now - t < 1.0]
            if len(self._cmd_times) >= COMMAND_RATE_LIMIT:
                self.dropped_commands += 1
                return False
            self._cmd_times.append(now)
            if cmd.kind == "set_target":
                self._target = cmd.target
            elif cmd.kind == "set_grip":
                self._grip = bool(cmd.grip)
            elif cmd.kind == "session_control":
                if cmd.action == "pause":
                    self._paused = True
                elif cmd.action == "start":
                    self._paused = False
                elif cmd.action == "next_trial":
                    self._skip = True
        return True


def create_app(hub: BridgeHub, ui_rate: float = 50.0,
               static_dir: str | None = None,
               info: dict | None = None) -> FastAPI:
    app = FastAPI()
    interval = 1.0 / ui_rate

    @app.get("/config")
    async def config_endpoint():
        return info or {}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):  # pragma: no cover - exercised e2e
        await ws.accept()

        async def sender():
            last_seq = -1
            while True:
                seq, state = hub.state()
                if state is not None and seq != last_seq:
                    last_seq = seq
                    await ws.send_text(json.dumps(state))
                await asyncio.sleep(interval)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    cmd = parse_command(raw)
                except CommandError as exc:
                    await ws.send_text(json.dumps(
                        {"v": SCHEMA_VERSION, "error": str(exc)}
                    ))
                    continue
                hub.apply(cmd)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")
    return app


def session_info(cfg) -> dict:
    """Static session facts the browser needs before the first state frame."""
    return {
        "v": SCHEMA_VERSION,
        "frame_map": {
            "theta": cfg.frame_map.theta,
            "c_scale": cfg.frame_map.c_scale,
            "x_offset": list(cfg.frame_map.x_offset),
            "rotation_sign": cfg.frame_map.rotation_sign,
        },
        "workspace": {
            "diameter": cfg.device.workspace_diameter,
            "height": cfg.device.workspace_height,
        },
        "shoulder_origin": list(cfg.kinematics.shoulder_origin),
        "grab_radius": CouplingState().grab_radius,
        "ui_rate": cfg.ui_rate,
        "leader_source": cfg.leader_source,
    }


class BridgeServer:
    """Live session with the WebSocket bridge attached.

    The leader is UI-driven when ``cfg.leader_source == "ui"``; otherwise
    the scripted policy runs and the bridge is observer-only.
    """

    def __init__(self, cfg, ws_port: int, out_dir: str, static_dir=None,
                 stop_after: float | None = None, pace: float | None = 1.0):
        import uvicorn

        self.cfg = cfg
        self.out_dir = out_dir
        self.hub = BridgeHub()
        self.app = create_app(self.hub, cfg.ui_rate, static_dir,
                              info=session_info(cfg))
        self.server = uvicorn.Server(uvicorn.Config(
            self.app, host="127.0.0.1", port=ws_port, log_level="warning",
        ))
        self._stop = threading.Event()
        self._stop_after = stop_after
        self._pace = pace
        self._sim_thread: threading.Thread | None = None
        self._server_thread: threading.Thread | None = None
        self.result = None

    def _sim(self):
        from .session import run_experiment

        try:
            self.result = run_experiment(
                self.cfg, self.out_dir,
                external_leader=(self.hub.leader_input
                                 if self.cfg.leader_source == "ui" else None),
                observer=self.hub.publish,
                pace=self._pace,
                max_sim_seconds=(self._stop_after if self._stop_after
                                 else 3600.0),
                stop_flag=self._stop.is_set,
                pause_flag=lambda: self.hub.paused,
                take_skip=self.hub.take_skip,
            )
        finally:
            self.server.should_exit = True

    def start(self) -> "BridgeServer":
        """Start server and sim on background threads; returns self."""
        self._server_thread = threading.Thread(target=self.server.run,
                                               daemon=True)
        self._server_thread.start()
        deadline = time.monotonic() + 5.0
        while not self.server.started and time.monotonic() < deadline:
            time.sleep(0.01)
        self._sim_thread = threading.Thread(target=self._sim, daemon=True)
        self._sim_thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        self.server.should_exit = True
        if self._sim_thread:
            self._sim_thread.join(timeout=10.0)
        if self._server_thread:
            self._server_thread.join(timeout=5.0)

    def run_blocking(self) -> None:
        self._sim_thread = threading.Thread(target=self._sim, daemon=True)
        self._sim_thread.start()
        try:
            self.server.run()
        finally:
            self.stop()


def serve_session(cfg, ws_port: int, out_dir: str, static_dir=None,
                  stop_after: float | None = None):
    """Blocking entry used by the CLI ``serve`` subcommand."""
    BridgeServer(cfg, ws_port, out_dir, static_dir=static_dir,
                 stop_after=stop_after).run_blocking()


def replay_session(log_dir: str, ws_port: int, static_dir=None,
                   speed: float = 1.0):
    """Stream a recorded log bundle to the UI at the recorded rate."""
    import json as _json
    import os

    import pandas as pd
    import uvicorn

    from .config import config_from_manifest
    from .session import snapshot_from_row

    with open(os.path.join(log_dir, "manifest.json")) as fh:
        manifest = _json.load(fh)
    cfg = config_from_manifest(manifest)
    ui_rate = cfg.ui_rate
    dt = cfg.dt
    ticks = pd.read_csv(os.path.join(log_dir, "ticks.csv"))

    hub = BridgeHub()
    app = create_app(hub, ui_rate, static_dir, info=session_info(cfg))
    server = uvicorn.Server(uvicorn.Config(
        app, host="127.0.0.1", port=ws_port, log_level="warning",
    ))

    def feeder():
        stride = max(1, int(round(1.0 / (ui_rate * dt))))
        rows = ticks.iloc[::stride]
        t0 = time.monotonic()
        start_t = float(rows.iloc[0]["t_s"]) if len(rows) else 0.0
        for _, row in rows.iterrows():
            if server.should_exit:
                return
            lag = t0 + (float(row["t_s"]) - start_t) / speed - time.monotonic()
            if lag > 0:
                time.sleep(lag)
            hub.publish(snapshot_from_row(row, manifest))
        server.should_exit = True

    threading.Thread(target=feeder, daemon=True).start()
    server.run()
