"""Command-line entry points: run, analyze, serve, replay."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace


def _load(config_path):
    from .config import SessionConfig, load_config

    return load_config(config_path) if config_path else SessionConfig()


def cmd_run(args) -> int:
    from .session import run_experiment, run_experiment_udp

    cfg = _load(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.transport is not None:
        cfg = replace(cfg, transport=args.transport)
    out = args.out or "runs/latest"
    if cfg.transport == "udp":
        result = run_experiment_udp(cfg, out)
    else:
        result = run_experiment(cfg, out)
    print(f"session complete: {result.n_trials_done} trials "
          f"({result.n_confirmed} confirmed), {result.n_ticks} ticks, "
          f"{result.wall_seconds:.1f}s wall")
    print(f"logs: {result.out_dir}")
    return 0


def cmd_analyze(args) -> int:
    from .analysis import analyze

    aggregate = analyze(args.in_dir, args.out_dir)
    for cond, stats in sorted(aggregate["conditions"].items()):
        ct = stats.get("completion_time")
        if ct:
            print(f"{cond}: mean completion {ct['mean']:.2f}s "
                  f"(median {ct['median']:.2f}s, n={ct['n']})")
    print(f"analysis written to {args.out_dir}")
    return 0


def _static_dir(explicit):
    """Serve the built control room when present next to the cwd."""
    import os

    if explicit:
        return explicit
    candidate = os.path.join("frontend", "dist")
    return candidate if os.path.isdir(candidate) else None


def cmd_serve(args) -> int:
    from .bridge import serve_session

    cfg = _load(args.config)
    static = _static_dir(args.static)
    print(f"control room on ws://127.0.0.1:{args.ws_port}/ws "
          f"(leader source: {cfg.leader_source}"
          + (f", ui from {static})" if static else ", no ui assets)"))
    serve_session(cfg, args.ws_port, args.out or "runs/serve",
                  static_dir=static)
    return 0


def cmd_replay(args) -> int:
    from .bridge import replay_session

    print(f"replaying {args.in_dir} on ws://127.0.0.1:{args.ws_port}/ws")
    replay_session(args.in_dir, args.ws_port,
                   static_dir=_static_dir(args.static), speed=args.speed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teleopsim",
        description="Haptic teleoperation training simulator and analysis kit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a seeded session")
    p_run.add_argument("--config", help="TOML session config")
    p_run.add_argument("--seed", type=int, help="override the session seed")
    p_run.add_argument("--transport", choices=["loopback", "udp"])
    p_run.add_argument("--out", help="output directory (default runs/latest)")
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="analyze a log bundle")
    p_an.add_argument("--in", dest="in_dir", required=True)
    p_an.add_argument("--out", dest="out_dir", required=True)
    p_an.set_defaults(func=cmd_analyze)

    p_serve = sub.add_parser("serve", help="live session with browser UI")
    p_serve.add_argument("--config", help="TOML session config")
    p_serve.add_argument("--ws-port", type=int, default=8765)
    p_serve.add_argument("--out", help="output directory")
    p_serve.add_argument("--static", help="static UI assets directory")
    p_serve.set_defaults(func=cmd_serve)

    p_replay = sub.add_parser("replay", help="stream a recorded log to the UI")
    p_replay.add_argument("--in", dest="in_dir", required=True)
    p_replay.add_argument("--ws-port", type=int, default=8765)
    p_replay.add_argument("--static", help="static UI assets directory")
    p_replay.add_argument("--speed", type=float, default=1.0)
    p_replay.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # surface a clean one-liner, not a traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
