"""Wall-clock comparison of the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--steps 20000] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from deltachain import kernels, symplectic
from deltachain.transfer import ModelConfig, free_transfer


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(steps: int):
    cfg = ModelConfig((1.0, 0.0, 1.0), "lifted")
    free = free_transfer(cfg, 1.6)
    rng = np.random.default_rng(0)
    q = rng.integers(0, 2, size=(steps, 3)) * cfg.c
    subsets = [symplectic.subsets(6, p) for p in (1, 2, 3)]
    vecs = [v / np.linalg.norm(v) for v in (rng.standard_normal(len(s)) for s in subsets)]
    frees = np.stack([free_transfer(cfg, e) for e in np.linspace(1.5, 1.7, 32)])
    qd = q[:200]
    m = 4000
    ab = np.zeros((4, m))
    ab[0] = rng.uniform(-1, 3, m)
    ab[1:] = rng.uniform(-0.3, 0.3, (3, m))
    return {
        "qr_trajectory": lambda k: k.qr_trajectory(free, q, 8, 20),
        "exterior_trajectory": lambda k: k.exterior_trajectory(free, q, 8, 20, subsets, vecs),
        "dirichlet_frames": lambda k: k.dirichlet_frames(frees, qd),
        "band_inertia": lambda k: k.band_inertia(ab),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    names = kernels.available()
    print(f"{'kernel':22s}" + "".join(f"{n:>12s}" for n in names) + "     speedup")
    for name, fn in cases(args.steps).items():
        times = {b: _best(lambda: fn(kernels.get(b)), args.repeat) for b in names}
        row = f"{name:22s}" + "".join(f"{times[b]:11.4f}s" for b in names)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
