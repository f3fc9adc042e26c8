#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python twin.

Times each kernel on representative inputs and a composite "one simulation
tick" of kernel work, then (optionally) a short full session with each
backend. Run from the repository root:

    python benchmarks/bench_kernels.py [--sessions]
"""
import argparse
import statistics
import sys
import time

from teleopsim._kernels import _pykernels

try:
    from teleopsim._kernels import _ckernels
except ImportError:
    _ckernels = None

Q = (0.3, 0.9, 0.1, 1.2, 0.2, -0.1)
JAC = None


def bench(fn, args, n=200_000, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(n):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / n)
    return best * 1e9  # ns/op


def composite_tick(k):
    """The kernel work of one controller+follower tick."""
    pts = k.fk_points(Q, 0.3, 0.25, 0.3, 0.0, 1.2)
    jac = k.point_jacobian(Q, 0.3, 0.25, True)
    forces = k.coupling_forces(pts[3] + 0.05, pts[4], pts[5], 0.1, 0, 0,
                               pts[3], pts[4], pts[5], 0, 0, 0,
                               30.0, 0.1, 80.0, 4.0)
    tau = k.jac_t_force(jac, forces[3], forces[4], forces[5], 30.0)
    g = k.gravity_torques(Q, 0.3, 0.25, 2.0, 1.5, 0.45, 9.81)
    net = tuple(tau[i] - 0.35 * g[i] for i in range(6))
    k.plant_advance(Q, net, (4.0,) * 6, 0.002,
                    (-0.5, -0.5, -1.2, 0.0, -1.5, -1.0),
                    (2.0, 2.8, 1.2, 2.4, 1.5, 1.0))


CASES = [
    ("fk_points", lambda k: (k.fk_points, (Q, 0.3, 0.25, 0.3, 0.0, 1.2))),
    ("point_jacobian(wrist)",
     lambda k: (k.point_jacobian, (Q, 0.3, 0.25, True))),
    ("gravity_torques",
     lambda k: (k.gravity_torques, (Q, 0.3, 0.25, 2.0, 1.5, 0.45, 9.81))),
    ("coupling_forces",
     lambda k: (k.coupling_forces,
                (0.5, 0.1, 1.0, 0.1, 0, 0, 0.45, 0.1, 1.0, 0, 0, 0,
                 30.0, 0.1, 80.0, 4.0))),
    ("composite tick", lambda k: (composite_tick, (k,))),
]


def bench_sessions():
    import os
    import subprocess
    import tempfile

    code = (
        "import time, tempfile\n"
        "from teleopsim.config import config_from_dict\n"
        "from teleopsim.session import run_experiment\n"
        "cfg = config_from_dict({'session': {'seed': 7},"
        " 'task': {'blocks': 1, 'familiarization': 0}})\n"
        "res = run_experiment(cfg, tempfile.mkdtemp(), max_sim_seconds=600)\n"
        "print('%.3f' % res.wall_seconds)\n"
    )
    out = {}
    for backend in ("", "python"):
        env = dict(os.environ)
        if backend:
            env["TELEOPSIM_KERNELS"] = backend
        else:
            env.pop("TELEOPSIM_KERNELS", None)
        r = subprocess.run([sys.executable, "-c", code], env=env,
                           capture_output=True, text=True, check=True)
        out[backend or "compiled"] = float(r.stdout.strip().splitlines()[-1])
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sessions", action="store_true",
                        help="also time a short full session per backend")
    parser.add_argument("-n", type=int, default=200_000)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels unavailable; timing pure Python only")
    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("compiled", _ckernels))

    print(f"{'kernel':26s}" + "".join(f"{name:>14s}" for name, _ in backends)
          + ("       speedup" if _ckernels else ""))
    for label, case in CASES:
        times = []
        for _, mod in backends:
            fn, fnargs = case(mod)
            times.append(bench(fn, fnargs, n=args.n))
        line = f"{label:26s}" + "".join(f"{t:11.0f} ns" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:11.1f}x"
        print(line)

    if args.sessions:
        print("\nfull 10-trial session (wall seconds):")
        for backend, seconds in bench_sessions().items():
            print(f"  {backend:10s} {seconds:.2f} s")


if __name__ == "__main__":
    main()
