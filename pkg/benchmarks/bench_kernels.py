"""Compare the numba kernels with their numpy twins.

    python benchmarks/bench_kernels.py               # per-kernel timings
    python benchmarks/bench_kernels.py --end-to-end  # also a full direct run per backend

Per-kernel timings run both versions in this process (numba must be
importable). The end-to-end run starts one subprocess per backend with
KINVAL_DISABLE_NUMBA set accordingly, so the numpy run never touches numba.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from kinval import kernels
from kinval.fixtures import named_shape, random_star
from kinval.kinematic import MotionFamily, SmoothedForm, _split_line_integral, moved_edges
from kinval import quadrature as quad

E2E_SNIPPET = """
import time
from kinval import kernels
from kinval.fixtures import named_shape
from kinval.forms import lk0
from kinval.kinematic import MotionFamily, kinematic_direct
F = MotionFamily(3.0, 3.5, 1.0, grid=({g}, {g}, {g}))
S = named_shape("L")
kinematic_direct(F, S, lk0(), S, grid=(8, 8, 8))
t = time.perf_counter()
v = kinematic_direct(F, S, lk0(), S)["mu"]
print(kernels.BACKEND, time.perf_counter() - t, repr(v))
"""


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a.shape == b.shape and np.allclose(a, b, rtol=1e-10, atol=1e-12)


def cases(n_motions, n_points, seed):
    rng = np.random.default_rng(seed)
    A = random_star(rng, 12, 1.0)
    X = named_shape("L")
    alpha = rng.uniform(0, 2 * np.pi, n_motions)
    t = rng.uniform(-1.5, 1.5, (n_motions, 2))
    a0, a1 = A.edges
    B0, B1 = moved_edges(X, alpha, t)
    E0, E1 = B0, B1
    pts = rng.uniform(-1.5, 1.5, (n_motions, 2))
    grp = np.arange(n_motions)
    p0 = np.repeat(a0[None], n_motions, 0).reshape(-1, 2)
    p1 = np.repeat(a1[None], n_motions, 0).reshape(-1, 2)
    pgrp = np.repeat(grp, len(a0))

    F = MotionFamily(2.0, 3.0, 1.0)
    om = SmoothedForm(F, X, memoize=False)
    r = 3.5 * np.sqrt(rng.random(n_points))
    phi = rng.uniform(0, 2 * np.pi, n_points)
    xi = np.column_stack([r * np.cos(phi), r * np.sin(phi), rng.uniform(0, 2 * np.pi, n_points)])
    q0 = rng.uniform(-3, 3, (n_points, 2))
    d = rng.uniform(-1, 1, (n_points, 2))
    radii, sx, sc, k_inf = F.band_table
    xg, wg = quad.gauss_legendre(64)

    return {
        "transverse": (lambda: kernels.transverse_batch(a0, a1, B0, B1, backend="numba"),
                       lambda: kernels.transverse_batch(a0, a1, B0, B1, backend="numpy")),
        "crossings": (lambda: kernels.crossings_batch(a0, a1, B0, B1, backend="numba"),
                      lambda: kernels.crossings_batch(a0, a1, B0, B1, backend="numpy")),
        "inside": (lambda: kernels.inside_batch(pts, grp, E0, E1, backend="numba"),
                   lambda: kernels.inside_batch(pts, grp, E0, E1, backend="numpy")),
        "clip": (lambda: kernels.clip_batch(p0, p1, pgrp, E0, E1, backend="numba"),
                 lambda: kernels.clip_batch(p0, p1, pgrp, E0, E1, backend="numpy")),
        "omega": (lambda: om._compute(xi),
                  lambda: om._compute_np(xi)),
        "line_h": (lambda: kernels.line_h_loop(q0, d, radii, float(F.c), sx, sc, float(k_inf), xg, wg),
                   lambda: _split_line_integral(F, q0, d, F._h, 0.5 * F.c, 64)),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--motions", type=int, default=20000)
    p.add_argument("--points", type=int, default=5000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--end-to-end", action="store_true")
    p.add_argument("--grid", type=int, default=32)
    args = p.parse_args(argv)

    if kernels.BACKEND != "numba":
        print("numba is disabled or missing; per-kernel comparison needs it", file=sys.stderr)
    else:
        print(f"{'kernel':<12}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  agree")
        for name, (fast, slow) in cases(args.motions, args.points, args.seed).items():
            fast()  # compile
            t_nb, out_nb = best_of(fast, args.repeat)
            t_np, out_np = best_of(slow, args.repeat)
            print(f"{name:<12}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}  {_same(out_nb, out_np)}")

    if args.end_to_end:
        print("\nend to end: direct route, L-shape against itself, grid", args.grid)
        for flag in ("0", "1"):
            env = dict(os.environ, KINVAL_DISABLE_NUMBA=flag)
            res = subprocess.run([sys.executable, "-c", E2E_SNIPPET.format(g=args.grid)], env=env,
                                 capture_output=True, text=True, check=True)
            backend, secs, value = res.stdout.split()
            print(f"{backend:<8}{float(secs):>10.3f} s   value {value}")


if __name__ == "__main__":
    main()
