"""Lyapunov spectrum of the i.i.d. transfer-matrix product.

Two estimators share the sampled cell sequence:

* ``"qr"``: an orthonormal frame of 2N vectors is pushed through blocks of
  cells and re-orthonormalised; log R_ii accumulates exponent i.
* ``"exterior"``: for every p <= N a start vector in wedge^p R^{2N} is pushed
  through wedge^p of each block product; its log growth estimates
  gamma_1 + ... + gamma_p, and differences recover gamma_p. The lower half
  of the spectrum follows from gamma_{2N-i+1} = -gamma_i.

Standard errors come from batch means over one long trajectory.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels, symplectic
from .errors import InsufficientData, PreconditionError
from .sampling import DistributionSpec, SampleStream, support_bounds
from .transfer import ModelConfig, free_transfer

SCHEMES = ("qr", "exterior")
MAX_BLOCK_CONDITION = 1e8
MIN_STEPS = 1000


@dataclass(frozen=True)
class LyapunovSpectrum:
    energy: float
    exponents: np.ndarray
    stderr: np.ndarray
    steps: int
    block_size: int
    scheme: str
    seed: int
    key: tuple[int, ...] = ()
    batch_estimates: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.exponents.size // 2

    def positive_sum(self) -> float:
        return float(self.exponents[: self.n].sum())

    def positive_sum_stderr(self) -> float:
        """Batch-means standard error of gamma_1 + ... + gamma_N."""
        b = self.batch_estimates[:, : self.n].sum(axis=1)
        return float(b.std(ddof=1) / math.sqrt(b.size))


def _jump_norm(q: np.ndarray) -> float:
    q = np.abs(q)
    return float(np.max((q + np.sqrt(q * q + 4.0)) / 2.0)) if q.size else 1.0


def adapted_block_size(free: np.ndarray, q_bound: np.ndarray, block: int) -> int:
    """Largest block length <= ``block`` whose a priori condition bound stays under 1e8.

    For symplectic blocks cond = ||B||^2, and ||B|| is bounded by the product
    of single-cell norms.
    """
    cell = np.linalg.norm(free, 2) * _jump_norm(q_bound)
    if cell <= 1.0:
        return block
    fit = int(math.log(MAX_BLOCK_CONDITION) / (2.0 * math.log(cell)))
    return max(1, min(block, fit))


def _start_vectors(seed: int, key: tuple[int, ...], subsets) -> list[np.ndarray]:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key) + (0x5EED,))
    rng = np.random.Generator(np.random.Philox(ss))
    vecs = []
    for s in subsets:
        v = rng.standard_normal(len(s))
        vecs.append(v / np.linalg.norm(v))
    return vecs


def estimate_spectrum(cfg: ModelConfig, energy: float, spec: DistributionSpec, seed: int,
                      steps: int = 10**6, block_size: int = 10, scheme: str = "qr",
                      batches: int = 20, key: tuple[int, ...] = (), backend: str | None = None,
                      method: str = "auto") -> LyapunovSpectrum:
    if spec.n != cfg.n:
        raise PreconditionError(f"distribution has {spec.n} channels, model has {cfg.n}")
    if steps < MIN_STEPS:
        raise PreconditionError(f"steps={steps} below the minimum {MIN_STEPS}")
    if not 1 <= block_size <= 100:
        raise PreconditionError("block size must lie in 1..100")
    if batches < 2:
        raise PreconditionError("at least two batches are needed for a standard error")
    if scheme not in SCHEMES:
        raise PreconditionError(f"unknown scheme {scheme!r}")
    per = steps // batches
    steps = per * batches
    free = free_transfer(cfg, energy, method)
    lo, hi = support_bounds(spec)
    q_bound = np.maximum(np.abs(cfg.c * lo), np.abs(cfg.c * hi))
    block = adapted_block_size(free, q_bound, block_size)
    q = SampleStream(spec, seed, key).sample(steps) * cfg.c
    kern = kernels.get(backend)
    n = cfg.n
    if scheme == "qr":
        batch = kern.qr_trajectory(free, q, block, batches) / per
    else:
        subsets = [symplectic.subsets(2 * n, p) for p in range(1, n + 1)]
        logs = kern.exterior_trajectory(free, q, block, batches, subsets,
                                        _start_vectors(seed, key, subsets))
        top = np.diff(logs, axis=1, prepend=0.0) / per
        batch = np.concatenate([top, -top[:, ::-1]], axis=1)
    exps = batch.mean(axis=0)
    err = batch.std(axis=0, ddof=1) / math.sqrt(batches)
    return LyapunovSpectrum(float(energy), exps, err, steps, block, scheme, int(seed),
                            tuple(key), batch)


def _estimate_star(args):
    return estimate_spectrum(*args[0], **args[1])


def scan_spectrum(cfg: ModelConfig, spec: DistributionSpec, energies, seed: int,
                  steps: int = 10**6, block_size: int = 10, scheme: str = "qr",
                  batches: int = 20, workers: int = 1, common_random_numbers: bool = False,
                  backend: str | None = None) -> list[LyapunovSpectrum]:
    """Independent estimates on an energy grid, returned in grid order.

    Point i draws from substream (seed, i), or from the shared stream when
    ``common_random_numbers`` is set; either way the result does not depend
    on ``workers``.
    """
    jobs = []
    for i, e in enumerate(energies):
        key = () if common_random_numbers else (i,)
        jobs.append(((cfg, float(e), spec, seed),
                     dict(steps=steps, block_size=block_size, scheme=scheme,
                          batches=batches, key=key, backend=backend)))
    if workers <= 1 or len(jobs) <= 1:
        return [_estimate_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_estimate_star, jobs))


@dataclass(frozen=True)
class HolderFit:
    alpha: float
    c: float
    r_squared: float
    inconclusive: bool
    used: int
    reason: str = ""


def holder_exponent_fit(energies, values, noise_floor: float = 0.0,
                        min_points: int = 10, min_scales: int = 3,
                        max_separation: float | None = None) -> HolderFit:
    """Fit |f(E) - f(E')| <= C |E - E'|^alpha on a sampled curve.

    Pairs are grouped by separation; the largest difference in each group is
    the empirical modulus of continuity, and log-modulus is regressed on
    log-separation. Separations whose modulus does not exceed ``noise_floor``
    are dropped, as are separations beyond ``max_separation``; too few
    survivors flag the fit as inconclusive.
    """
    e = np.asarray(energies, dtype=float)
    v = np.asarray(values, dtype=float)
    if e.size < min_points:
        raise InsufficientData(f"Hoelder fit needs at least {min_points} points, got {e.size}")
    order = np.argsort(e)
    e, v = e[order], v[order]
    i, j = np.triu_indices(e.size, k=1)
    de = e[j] - e[i]
    dv = np.abs(v[j] - v[i])
    scale = max(np.abs(e).max(), 1.0)
    keys = np.round(de / (scale * 1e-9)).astype(np.int64)
    uniq, inv = np.unique(keys, return_inverse=True)
    modulus = np.zeros(uniq.size)
    np.maximum.at(modulus, inv, dv)
    sep = np.zeros(uniq.size)
    np.maximum.at(sep, inv, de)
    keep = (modulus > noise_floor) & (modulus > 0) & (sep > 0)
    if max_separation is not None:
        keep &= sep <= max_separation * (1 + 1e-9)
    if keep.sum() < min_scales:
        return HolderFit(float("nan"), float("nan"), float("nan"), True, int(keep.sum()),
                         "differences at or below the noise floor")
    x, y = np.log(sep[keep]), np.log(modulus[keep])
    alpha, logc = np.polyfit(x, y, 1)
    resid = y - (alpha * x + logc)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / sst if sst > 0 else 1.0
    return HolderFit(float(alpha), float(math.exp(logc)), r2, False, int(keep.sum()))
