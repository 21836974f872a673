"""Benchmark the accelerated kernels against the pure-numpy fallback.

Runs each kernel with the backend selected by the current environment,
then re-runs itself in a subprocess with ``QPOTLAB_NO_NUMBA=1`` and prints
a side-by-side table.  Use ``--json`` for machine-readable output of the
current process only.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --seeds 20000 --repeats 7
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from qpotlab import kernels

TRIDIAG_SIZES = (1022, 4094, 16382)
TRIDIAG_SOLVES = 200


def bench_tridiagonal(size: int, repeats: int, rng: np.random.Generator) -> float:
    """Best wall time for TRIDIAG_SOLVES consecutive solves of one system."""
    dl = rng.normal(size=size - 1) + 1j * rng.normal(size=size - 1)
    du = rng.normal(size=size - 1) + 1j * rng.normal(size=size - 1)
    d = 6.0 + rng.normal(size=size) * 0.1 + 0j
    b = rng.normal(size=size) + 1j * rng.normal(size=size)
    kernels.solve_tridiagonal(dl, d, du, b)  # warmup / JIT compile
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(TRIDIAG_SOLVES):
            kernels.solve_tridiagonal(dl, d, du, b)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_advection(
    frames: int, seeds: int, points: int, substeps: int, repeats: int,
    rng: np.random.Generator,
) -> float:
    """Best wall time for one full trajectory integration."""
    x = np.linspace(0.0, 1.0, points, endpoint=False)
    t = np.arange(frames)[:, None]
    vframes = 0.3 * np.sin(2 * np.pi * (x[None, :] - 0.01 * t)) + 0.1
    seed_pos = rng.uniform(0.0, 1.0, size=seeds)
    dt_frame = 1e-3
    args = (vframes, 0.0, x[1] - x[0], dt_frame, seed_pos)
    kw = dict(substeps=substeps, periodic=True, length=1.0)
    kernels.advect_seeds(*args, **kw)  # warmup / JIT compile
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.advect_seeds(*args, **kw)
        best = min(best, time.perf_counter() - t0)
    return best


def run_suite(args: argparse.Namespace) -> dict:
    rng = np.random.default_rng(20240901)
    tridiag = {
        str(size): bench_tridiagonal(size, args.repeats, rng)
        for size in TRIDIAG_SIZES
    }
    advection = bench_advection(
        args.frames, args.seeds, args.points, args.substeps, args.repeats, rng
    )
    return {
        "backend": "numba" if kernels.USING_NUMBA else "numpy",
        "tridiagonal_seconds": tridiag,
        "advection_seconds": advection,
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeats")
    parser.add_argument("--frames", type=int, default=51)
    parser.add_argument("--seeds", type=int, default=10000)
    parser.add_argument("--points", type=int, default=1024)
    parser.add_argument("--substeps", type=int, default=4)
    parser.add_argument(
        "--json", action="store_true",
        help="print this process's results as JSON and exit (no comparison run)",
    )
    args = parser.parse_args(argv)

    mine = run_suite(args)
    if args.json:
        print(json.dumps(mine))
        return 0

    env = dict(os.environ, QPOTLAB_NO_NUMBA="1")
    cmd = [sys.executable, os.path.abspath(__file__), "--json"]
    for flag in ("repeats", "frames", "seeds", "points", "substeps"):
        cmd += [f"--{flag}", str(getattr(args, flag))]
    other = json.loads(
        subprocess.run(cmd, env=env, check=True, capture_output=True, text=True).stdout
    )
    if mine["backend"] == other["backend"]:
        print(
            "note: numba unavailable or disabled in this environment; "
            "both columns use the numpy fallback"
        )

    rows = []
    for size in TRIDIAG_SIZES:
        a = mine["tridiagonal_seconds"][str(size)]
        b = other["tridiagonal_seconds"][str(size)]
        rows.append((f"tridiagonal n={size} ({TRIDIAG_SOLVES} solves)", a, b))
    rows.append(
        (
            f"advection {args.seeds} seeds x {args.frames} frames",
            mine["advection_seconds"],
            other["advection_seconds"],
        )
    )
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {mine['backend']:>12}  {other['backend']:>12}  speedup")
    for name, a, b in rows:
        print(f"{name:<{width}}  {a:>10.4f}s  {b:>10.4f}s  {b / a:>6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
