"""Thouless-formula cross-check between Lyapunov exponents and the density of states.

    gamma_1 + ... + gamma_N (E) = -alpha + int log|E' - E| - 1/2 log(E'^2 + 1) dn(E')

The measure dn is taken from finite differences of an IDS curve, each bin
spread uniformly over its energy range, so the log kernel integrates in
closed form and its singularity at E needs no cutoff. Above the last grid
energy the free asymptotic density sum_i 1/(2 pi sqrt(E' - mu_i)) is added,
mu_i being the eigenvalues of V0 + diag(c E[omega]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import InsufficientData, ParameterError, PreconditionError
from .ids import IDSCurve
from .lyapunov import HolderFit, LyapunovSpectrum, holder_exponent_fit


@dataclass(frozen=True)
class DOSMeasure:
    """Piecewise-uniform measure: ``masses[i]`` spread over [edges[i], edges[i+1]].

    A zero-width bin is a point mass. ``tail_levels`` switches on the
    asymptotic density beyond the last edge.
    """

    edges: np.ndarray
    masses: np.ndarray
    tail_levels: tuple[float, ...] = ()

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        if e.ndim != 1 or m.shape != (max(e.size - 1, 0),):
            raise ParameterError("need one mass per bin (len(edges) - 1)")
        if np.any(np.diff(e) < 0):
            raise ParameterError("bin edges must be sorted")
        if np.any(m < 0):
            raise ParameterError("masses must be nonnegative")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "tail_levels", tuple(float(x) for x in self.tail_levels))

    @property
    def total(self) -> float:
        return float(self.masses.sum())


def point_masses(points, masses) -> DOSMeasure:
    """Measure made of atoms (zero-width bins) at sorted ``points``."""
    p = np.asarray(points, dtype=float)
    m = np.asarray(masses, dtype=float)
    edges = np.repeat(p, 2)
    bins = np.zeros(edges.size - 1)
    bins[0::2] = m
    return DOSMeasure(edges, bins)


def measure_from_curve(curve: IDSCurve, tail_levels=()) -> DOSMeasure:
    """Finite-difference measure of an IDS curve.

    Mass already present at the first grid energy becomes an atom there.
    """
    g = np.asarray(curve.grid, dtype=float)
    v = np.asarray(curve.values, dtype=float)
    edges = np.concatenate([[g[0]], g])
    masses = np.concatenate([[v[0]], np.diff(v)])
    return DOSMeasure(edges, masses, tuple(tail_levels))


def asymptotic_levels(v0: np.ndarray, c, mean_omega) -> tuple[float, ...]:
    """Channel thresholds of the averaged operator -d^2 + V0 + diag(c E[omega])."""
    m = np.asarray(v0, float) + np.diag(np.asarray(c, float) * np.asarray(mean_omega, float))
    return tuple(np.linalg.eigvalsh(m).tolist())


def _f_sing(x, e):
    # antiderivative of log|x - e|
    d = np.asarray(x, dtype=float) - e
    ad = np.abs(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ad > 0, d * np.log(np.where(ad > 0, ad, 1.0)) - d, 0.0)


def _f_reg(x):
    # antiderivative of 1/2 log(x^2 + 1)
    x = np.asarray(x, dtype=float)
    return 0.5 * (x * np.log1p(x * x) - 2 * x + 2 * np.arctan(x))


def kernel(xp, e):
    """log|E' - E| - 1/2 log(E'^2 + 1)."""
    xp = np.asarray(xp, dtype=float)
    return np.log(np.abs(xp - e)) - 0.5 * np.log1p(xp * xp)


def tail_integral(levels, start: float, e: float) -> float:
    """Kernel integrated against sum_i 1/(2 pi sqrt(x - mu_i)) over (start, inf)."""
    if not levels:
        return 0.0
    total = 0.0
    for mu in levels:
        a = max(start, mu)
        # x = mu + t^2 removes the square-root endpoint singularity
        t0 = math.sqrt(a - mu)

        def f(t, mu=mu):
            x = mu + t * t
            return kernel(x, e) / math.pi

        # the log singularity at x = e sits at t = sqrt(e - mu)
        te = math.sqrt(e - mu) if e > mu else -1.0
        if te > t0:
            val = quad(f, t0, te, limit=400)[0] + quad(f, te, np.inf, limit=400)[0]
        else:
            val = quad(f, t0, np.inf, limit=400)[0]
        total += val
    return total


def log_kernel_integral(measure: DOSMeasure, energy: float) -> float:
    """Integral of the Thouless kernel against ``measure`` (plus its tail, if any)."""
    e = float(energy)
    a, b = measure.edges[:-1], measure.edges[1:]
    m = measure.masses
    w = b - a
    live = m > 0
    if np.any(live & (w == 0) & (a == e)):
        raise PreconditionError(f"E={e} carries an atom; the log kernel diverges")
    wide = live & (w > 0)
    total = 0.0
    if np.any(wide):
        aa, bb, mm, ww = a[wide], b[wide], m[wide], w[wide]
        total += float(np.sum(mm / ww * ((_f_sing(bb, e) - _f_sing(aa, e)) - (_f_reg(bb) - _f_reg(aa)))))
    atoms = live & (w == 0)
    if np.any(atoms):
        total += float(np.sum(m[atoms] * kernel(a[atoms], e)))
    if measure.tail_levels:
        total += tail_integral(measure.tail_levels, float(measure.edges[-1]), e)
    return total


@dataclass(frozen=True)
class ThoulessFit:
    alpha_hat: float
    residuals: np.ndarray
    grid_used: np.ndarray
    integrals: np.ndarray
    sums: np.ndarray
    alpha_stderr: float = 0.0


def fit_thouless(spectra, measure: DOSMeasure, sums=None, sums_stderr=None) -> ThoulessFit:
    """Least-squares alpha for s(E) = -alpha + integral(E).

    ``spectra`` is a list of LyapunovSpectrum, or a list of energies when
    ``sums`` supplies s(E) directly.
    """
    if sums is None:
        spectra = list(spectra)
        energies = np.array([s.energy for s in spectra])
        s = np.array([sp.positive_sum() for sp in spectra])
        err = np.array([sp.positive_sum_stderr() for sp in spectra])
    else:
        energies = np.asarray(spectra, dtype=float)
        s = np.asarray(sums, dtype=float)
        err = np.zeros_like(s) if sums_stderr is None else np.asarray(sums_stderr, dtype=float)
    if energies.size < 3:
        raise InsufficientData("the Thouless fit needs at least three energies")
    lo, hi = measure.edges[0], measure.edges[-1]
    if np.any(energies <= lo) or np.any(energies >= hi):
        raise PreconditionError("fit energies must lie inside the measure's range")
    integ = np.array([log_kernel_integral(measure, e) for e in energies])
    alpha = float(np.mean(integ - s))
    resid = s + alpha - integ
    alpha_err = float(math.sqrt(np.sum(err ** 2)) / energies.size)
    return ThoulessFit(alpha, resid, energies, integ, s, alpha_err)


def _kernel_variation(lo: float, hi: float, e: float, delta: float) -> float:
    """int |d/dx kernel(x, e)| over [lo, hi] minus (e - delta, e + delta)."""
    def dk(x):
        return abs(1.0 / (x - e) - x / (x * x + 1.0))
    total = 0.0
    for a, b in ((lo, e - delta), (e + delta, hi)):
        if b > a:
            total += quad(dk, a, b, limit=200)[0]
    return total


def error_budget(fit: ThoulessFit, sums_stderr, measure: DOSMeasure, L: int, n: int) -> np.ndarray:
    """Per-energy tolerance for |residual|.

    Statistical part: 3 sqrt(stderr_s^2 + stderr_alpha^2). IDS part: a
    sup-norm error eps = 2N/(2L) of the finite-volume curve, pushed through
    the kernel by parts; inside one mean level spacing delta of E the kernel
    is bounded by its log instead, giving eps (V + 2 |log delta| + 2).
    """
    err = np.asarray(sums_stderr, dtype=float)
    eps = 2.0 * n / (2.0 * L)
    lo, hi = measure.edges[0], measure.edges[-1]
    out = np.empty(fit.grid_used.size)
    cum = np.cumsum(measure.masses)
    window = 0.1
    for i, e in enumerate(fit.grid_used):
        local = (np.interp(e + window, measure.edges[1:], cum)
                 - np.interp(e - window, measure.edges[1:], cum)) / (2 * window)
        delta = min(0.5, 1.0 / (2 * L * max(local, 1e-3)))
        ids_part = eps * (_kernel_variation(lo, hi, e, delta) + 2 * abs(math.log(delta)) + 2)
        out[i] = 3.0 * math.sqrt(err[i] ** 2 + fit.alpha_stderr ** 2) + ids_part
    return out


def ids_holder_fit(curve: IDSCurve, interval, max_separation: float = 0.25) -> HolderFit:
    """Hoelder probe of N_L on ``interval``; count quanta 1/(2L) set the noise floor."""
    lo, hi = map(float, interval)
    g = np.asarray(curve.grid, dtype=float)
    sel = (g >= lo) & (g <= hi)
    quantum = 1.0 / (2.0 * curve.L)
    return holder_exponent_fit(g[sel], np.asarray(curve.values)[sel], noise_floor=3 * quantum,
                               max_separation=max_separation * (hi - lo))
