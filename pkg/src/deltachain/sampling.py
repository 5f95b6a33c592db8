"""Seeded i.i.d. coupling vectors omega^(n) with bounded support."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

KINDS = ("bernoulli", "uniform", "discrete")


@dataclass(frozen=True)
class DistributionSpec:
    """Law of one coupling vector in R^N.

    ``bernoulli``: channel i takes ``high[i]`` with probability ``p`` and
    ``low[i]`` otherwise, independently. ``uniform``: independent uniform
    draws on [low[i], high[i]]. ``discrete``: one of ``atoms`` with
    ``weights``. ``frozen`` pins channels (0-based) to fixed values on top
    of any kind.
    """

    kind: str
    n: int
    low: tuple[float, ...] = ()
    high: tuple[float, ...] = ()
    p: float = 0.5
    atoms: tuple[tuple[float, ...], ...] = ()
    weights: tuple[float, ...] = ()
    frozen: tuple[tuple[int, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        if self.n < 1:
            raise ParameterError("distribution needs at least one channel")
        if self.kind in ("bernoulli", "uniform"):
            if len(self.low) != self.n or len(self.high) != self.n:
                raise ParameterError("low/high need one value per channel")
            if not all(np.isfinite(self.low + self.high)):
                raise ParameterError("support must be bounded")
            if self.kind == "uniform" and any(h < l for l, h in zip(self.low, self.high)):
                raise ParameterError("uniform box needs low <= high")
            if not 0.0 <= self.p <= 1.0:
                raise ParameterError("p must lie in [0, 1]")
        else:
            if not self.atoms or any(len(a) != self.n for a in self.atoms):
                raise ParameterError("discrete atoms must be vectors of length n")
            if len(self.weights) != len(self.atoms) or min(self.weights) < 0 or sum(self.weights) <= 0:
                raise ParameterError("discrete weights must be nonnegative, one per atom")
            if not np.all(np.isfinite(self.atoms)):
                raise ParameterError("support must be bounded")
        for ch, _ in self.frozen:
            if not 0 <= ch < self.n:
                raise ParameterError(f"frozen channel {ch} outside 0..{self.n - 1}")

    @property
    def frozen_channels(self) -> tuple[int, ...]:
        return tuple(ch for ch, _ in self.frozen)

    def random_channels(self) -> tuple[int, ...]:
        """Channels that are not pinned and carry a non-degenerate law."""
        lo, hi = support_bounds(self)
        return tuple(i for i in range(self.n)
                     if i not in self.frozen_channels and hi[i] > lo[i])


def bernoulli(n: int, low: float = 0.0, high: float = 1.0, p: float = 0.5,
              frozen: dict[int, float] | None = None) -> DistributionSpec:
    return DistributionSpec("bernoulli", n, (float(low),) * n, (float(high),) * n, p=p,
                            frozen=tuple(sorted((frozen or {}).items())))


def uniform_box(low, high, frozen: dict[int, float] | None = None) -> DistributionSpec:
    low, high = tuple(map(float, low)), tuple(map(float, high))
    return DistributionSpec("uniform", len(low), low, high,
                            frozen=tuple(sorted((frozen or {}).items())))


def discrete(atoms, weights=None, frozen: dict[int, float] | None = None) -> DistributionSpec:
    atoms = tuple(tuple(map(float, a)) for a in atoms)
    weights = tuple(map(float, weights)) if weights is not None else (1.0,) * len(atoms)
    return DistributionSpec("discrete", len(atoms[0]), atoms=atoms, weights=weights,
                            frozen=tuple(sorted((frozen or {}).items())))


def support_bounds(spec: DistributionSpec) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise bounding box of supp(nu)."""
    if spec.kind == "discrete":
        atoms = np.asarray(spec.atoms)
        pos = np.asarray(spec.weights) > 0
        lo, hi = atoms[pos].min(axis=0), atoms[pos].max(axis=0)
    elif spec.kind == "bernoulli":
        lo = np.minimum(spec.low, spec.high)
        hi = np.maximum(spec.low, spec.high)
        if spec.p in (0.0, 1.0):
            lo = hi = np.asarray(spec.high if spec.p == 1.0 else spec.low, dtype=float)
    else:
        lo, hi = np.asarray(spec.low, float), np.asarray(spec.high, float)
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    for ch, val in spec.frozen:
        lo[ch] = hi[ch] = val
    return lo, hi


def mean(spec: DistributionSpec) -> np.ndarray:
    if spec.kind == "bernoulli":
        m = (1 - spec.p) * np.asarray(spec.low) + spec.p * np.asarray(spec.high)
    elif spec.kind == "uniform":
        m = 0.5 * (np.asarray(spec.low) + np.asarray(spec.high))
    else:
        w = np.asarray(spec.weights) / sum(spec.weights)
        m = w @ np.asarray(spec.atoms)
    m = np.array(m, dtype=float)
    for ch, val in spec.frozen:
        m[ch] = val
    return m


def _finite_support(spec: DistributionSpec) -> np.ndarray:
    if spec.kind == "discrete":
        pts = np.asarray(spec.atoms)[np.asarray(spec.weights) > 0]
    else:
        lo, hi = np.asarray(spec.low, float), np.asarray(spec.high, float)
        if spec.kind == "bernoulli" and spec.p in (0.0, 1.0):
            lo = hi = np.asarray(spec.high if spec.p == 1.0 else spec.low, dtype=float)
        corners = [lo.copy()]
        for i in range(spec.n):
            c = lo.copy()
            c[i] = hi[i]
            corners.append(c)
        pts = np.asarray(corners)
    pts = np.array(pts, dtype=float)
    for ch, val in spec.frozen:
        pts[:, ch] = val
    return pts


@dataclass(frozen=True)
class SpanResult:
    ok: bool
    dimension: int
    required: int
    witness: np.ndarray

    def __bool__(self):
        return self.ok


def verify_span_condition(spec: DistributionSpec, channels=None, tol: float = 1e-12) -> SpanResult:
    """Check that differences of support points span the randomised channels.

    ``channels`` defaults to every non-frozen channel. The witness holds
    linearly independent difference vectors, one per row.
    """
    if channels is None:
        channels = tuple(i for i in range(spec.n) if i not in spec.frozen_channels)
    channels = tuple(channels)
    pts = _finite_support(spec)[:, channels]
    diffs = pts[1:] - pts[0]
    chosen: list[np.ndarray] = []
    for d in diffs:
        trial = np.array(chosen + [d])
        if np.linalg.matrix_rank(trial, tol=tol * max(1.0, np.abs(trial).max())) > len(chosen):
            chosen.append(d)
        if len(chosen) == len(channels):
            break
    witness = np.array(chosen).reshape(len(chosen), len(channels))
    return SpanResult(len(chosen) == len(channels), len(chosen), len(channels), witness)


class SampleStream:
    """Counter-tracked, seed-reproducible stream of omega vectors.

    Generation uses the counter-based Philox bit generator keyed by
    (seed, key); substreams extend the key, so workers can draw disjoint
    deterministic sequences without coordination.
    """

    def __init__(self, spec: DistributionSpec, seed: int, key: tuple[int, ...] = ()):
        self.spec = spec
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self.counter = 0
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._rng = np.random.Generator(np.random.Philox(ss))

    def substream(self, index: int) -> "SampleStream":
        return SampleStream(self.spec, self.seed, self.key + (int(index),))

    def sample(self, count: int) -> np.ndarray:
        if count < 0:
            raise ParameterError("count must be nonnegative")
        spec = self.spec
        u = self._rng.random((count, spec.n))
        if spec.kind == "bernoulli":
            out = np.where(u < spec.p, np.asarray(spec.high), np.asarray(spec.low))
        elif spec.kind == "uniform":
            lo = np.asarray(spec.low)
            out = lo + (np.asarray(spec.high) - lo) * u
        else:
            w = np.cumsum(spec.weights) / sum(spec.weights)
            idx = np.minimum(np.searchsorted(w, u[:, 0], side="right"), len(w) - 1)
            out = np.asarray(spec.atoms)[idx]
        out = np.array(out, dtype=float).reshape(count, spec.n)
        for ch, val in spec.frozen:
            out[:, ch] = val
        self.counter += count
        return out
