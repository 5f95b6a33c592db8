"""Lie-algebra certificate that the Furstenberg group is Zariski dense in Sp_3(R).

All matrices here live in the channel basis that diagonalises V0, where one
free cell acts as R = diag-block rotations (or boosts below a threshold).
Conjugating a jump generator [[0, 0], [U^T Q U, 0]] by powers of R gives the
families D1(l), D2(l); together with two brackets they span sp_3(R) unless E
sits on a discrete critical set where one of two determinants vanishes.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ParameterError, PreconditionError, RegimeError
from .sampling import DistributionSpec, verify_span_condition
from .transfer import (SQRT2, ModelConfig, Regime, build_u, channel_levels, regime_params,
                       rotation_power)

SP3_DIM = 21
MEMBERSHIP_TOL = 1e-10
CLOSURE_TOL = 1e-8
GAP_WARN = 1e3
# sigma_min / sigma_max of the column-equilibrated matrix below this counts as
# a vanishing determinant; refined roots sit near 1e-9, generic energies above 1e-5
SINGULAR_TOL = 1e-8

Q_D1 = np.array([SQRT2, 0.0, -SQRT2])
Q_D2 = np.array([2.0, 0.0, 2.0])

# (row, col) slots of the eight coordinates (e, f, g, h, a, b, c, d) of a D1-type matrix
SLOTS_88 = ((4, 0), (5, 0), (0, 4), (0, 5), (0, 1), (0, 2), (1, 0), (2, 0))
# independent slots of the B/D2 family, lexicographic by (block row, block col, i, j)
SLOTS_1313 = ((0, 0), (1, 1), (1, 2), (2, 1), (2, 2), (0, 3), (1, 4), (1, 5), (2, 5),
              (3, 0), (4, 1), (4, 2), (5, 2))
# sign of det1313 at E=1.6 for the lifted potential under SLOTS_1313
DET1313_REFERENCE = -3507.662


class DetKind(enum.Enum):
    DET88 = "DET88"
    DET1313 = "DET1313"


def is_sp3(m: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
    """Block test for [[a, b1], [b2, -a^T]] with b1, b2 symmetric."""
    m = np.asarray(m, dtype=float)
    if m.shape != (6, 6):
        return False
    a, b1, b2, d = m[:3, :3], m[:3, 3:], m[3:, :3], m[3:, 3:]
    scale = max(1.0, np.abs(m).max())
    return bool(np.abs(d + a.T).max() <= tol * scale
                and np.abs(b1 - b1.T).max() <= tol * scale
                and np.abs(b2 - b2.T).max() <= tol * scale)


def form88(a=0.0, b=0.0, c=0.0, d=0.0, e=0.0, f=0.0, g=0.0, h=0.0) -> np.ndarray:
    """General element of the span of D1(0..7) when those eight are independent."""
    return np.array([[0, a, b, 0, g, h],
                     [c, 0, 0, g, 0, 0],
                     [d, 0, 0, h, 0, 0],
                     [0, e, f, 0, -c, -d],
                     [e, 0, 0, -a, 0, 0],
                     [f, 0, 0, -b, 0, 0]], dtype=float)


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def _params(energy: float, potential: str):
    p = regime_params(energy, potential)
    if p.regime is Regime.BOUNDARY:
        raise RegimeError(f"E={energy} lies on a channel threshold")
    return p


def jump_generator(q) -> np.ndarray:
    u = build_u()
    m = np.zeros((6, 6))
    m[3:, :3] = u.T @ np.diag(np.asarray(q, dtype=float)) @ u
    return m


def _conjugated(energy: float, q, l: int, potential: str) -> np.ndarray:
    p = _params(energy, potential)
    return rotation_power(p, l) @ jump_generator(q) @ rotation_power(p, -l)


def build_d1(energy: float, l: int, potential: str = "tridiagonal") -> np.ndarray:
    return _conjugated(energy, Q_D1, l, potential)


def build_d2(energy: float, l: int, potential: str = "tridiagonal") -> np.ndarray:
    return _conjugated(energy, Q_D2, l, potential)


def singular_ratio(m: np.ndarray) -> float:
    """sigma_min / sigma_max after scaling every column to unit norm."""
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0):
        return 0.0
    s = np.linalg.svd(m / norms, compute_uv=False)
    return float(s[-1] / s[0])


def det88_matrix(energy: float, potential: str = "tridiagonal") -> np.ndarray:
    cols = [build_d1(energy, l, potential) for l in range(8)]
    return np.array([[c[s] for s in SLOTS_88] for c in cols]).T


def det88(energy: float, potential: str = "tridiagonal") -> float:
    return float(np.linalg.det(det88_matrix(energy, potential)))


def det88_extended(energy: float, potential: str = "tridiagonal", dps: int = 40) -> float:
    """8x8 determinant from the explicit coordinate vectors, in ``dps``-digit arithmetic.

    Resolves the determinant near its high-order zeros, where the double
    precision path only reaches roundoff relative to the column norms.
    """
    import mpmath

    _params(energy, potential)
    with mpmath.workdps(dps):
        e = mpmath.mpf(energy)
        a, b, g = (mpmath.sqrt(mpmath.mpc(e - mpmath.mpf(lv))) for lv in
                   (0 if potential == "tridiagonal" else 1, mpmath.sqrt(2), -mpmath.sqrt(2)))
        s, c = mpmath.sin, mpmath.cos
        cols = []
        for l in range(8):
            cols.append([-c(l * a) * c(l * b), -c(l * a) * c(l * g),
                         s(l * a) * s(l * b) / (a * b), s(l * a) * s(l * g) / (a * g),
                         s(l * a) * c(l * b) / a, s(l * a) * c(l * g) / a,
                         s(l * b) * c(l * a) / b, s(l * g) * c(l * a) / g])
        m = mpmath.matrix(8, 8)
        for j, col in enumerate(cols):
            for i, v in enumerate(col):
                m[i, j] = v
        return float(mpmath.re(mpmath.det(m)))


def det88_closed_form(energy: float, potential: str = "tridiagonal") -> float:
    """Factorised 8x8 determinant, continued analytically into every regime.

    Wave numbers are complex square roots of E - level, so sin(k)/k and
    cos(k) become their hyperbolic counterparts below a threshold.
    """
    _params(energy, potential)
    a, b, g = np.sqrt(complex(energy) - channel_levels(potential).astype(complex))
    ca, cb, cg = np.cos(a), np.cos(b), np.cos(g)
    x = -np.sin(2 * a) ** 2 + cb ** 2 + cg ** 2 + 2 * cb * cg * (1 - 2 * ca ** 2)
    val = (4096 * (np.sin(a) / a) ** 4 * (np.sin(b) / b) ** 2 * (np.sin(g) / g) ** 2
           * (cb - cg) ** 4 * (ca ** 2 - cb ** 2) * (ca ** 2 - cg ** 2) * x ** 2)
    return float(val.real)


def det88_vanishes(energy: float, potential: str = "tridiagonal") -> bool:
    return singular_ratio(det88_matrix(energy, potential)) <= SINGULAR_TOL


def build_brackets(energy: float, potential: str = "tridiagonal",
                   check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """B0 = [form88(a=1), D1(0)] and B1 = [form88(b=1), D1(0)].

    form88(...) only belongs to the generated algebra when D1(0..7) are
    independent, so E on the 8x8 critical set is rejected.
    """
    if check and det88_vanishes(energy, potential):
        raise PreconditionError(f"det88 vanishes at E={energy}; B0, B1 are not certified")
    d10 = build_d1(energy, 0, potential)
    return bracket(form88(a=1.0), d10), bracket(form88(b=1.0), d10)


def det1313_matrix(energy: float, potential: str = "tridiagonal") -> np.ndarray:
    b0, b1 = build_brackets(energy, potential, check=False)
    cols = [b0, b1] + [build_d2(energy, l, potential) for l in range(11)]
    return np.array([[c[s] for s in SLOTS_1313] for c in cols]).T


def det1313(energy: float, potential: str = "tridiagonal") -> float:
    if det88_vanishes(energy, potential):
        raise PreconditionError(f"det88 vanishes at E={energy}")
    return float(np.linalg.det(det1313_matrix(energy, potential)))


def det1313_vanishes(energy: float, potential: str = "tridiagonal") -> bool:
    return singular_ratio(det1313_matrix(energy, potential)) <= SINGULAR_TOL


@dataclass(frozen=True)
class ClosureResult:
    dim: int
    span_dim: int
    gap: float
    ambiguous: bool
    iterations: int

    def __int__(self):
        return self.dim


def _rank(rows: np.ndarray, tol: float):
    _, s, vt = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return 0, np.inf, vt[:0]
    r = int(np.sum(s > tol * s[0]))
    gap = np.inf if r == s.size else float(s[r - 1] / max(s[r], np.finfo(float).tiny))
    return r, gap, vt[:r]


def lie_closure(generators, tol: float = CLOSURE_TOL) -> ClosureResult:
    """Dimension of the Lie algebra generated by ``generators`` inside sp_3(R).

    Elements are vectorised and normalised; the span is extended by all
    brackets of basis elements until its rank stops growing. ``gap`` is the
    ratio of the last kept to the first dropped singular value.
    """
    gens = [np.asarray(g, dtype=float) for g in generators]
    for g in gens:
        if not is_sp3(g):
            raise ParameterError("generator is not in sp_3(R)")
    rows = [g.ravel() / np.linalg.norm(g) for g in gens if np.linalg.norm(g) > 0]
    if not rows:
        return ClosureResult(0, 0, np.inf, False, 0)
    span, gap, basis = _rank(np.array(rows), tol)
    dim, it = span, 0
    while True:
        it += 1
        mats = basis.reshape(-1, 6, 6)
        new = []
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                v = bracket(mats[i], mats[j]).ravel()
                n = np.linalg.norm(v)
                if n > tol:
                    new.append(v / n)
        if not new:
            break
        r, gap, basis = _rank(np.vstack([basis] + new), tol)
        if r == dim:
            break
        dim = r
    if dim > SP3_DIM:
        raise PreconditionError(f"closure dimension {dim} exceeds dim sp_3 = 21")
    return ClosureResult(dim, span, gap, gap < GAP_WARN, it)


def lie_closure_dim(generators, tol: float = CLOSURE_TOL) -> int:
    return lie_closure(generators, tol).dim


def generator_family(energy: float, potential: str = "tridiagonal") -> list[np.ndarray]:
    """D1(0..7), D2(0..10), B0, B1."""
    d1 = [build_d1(energy, l, potential) for l in range(8)]
    d2 = [build_d2(energy, l, potential) for l in range(11)]
    return d1 + d2 + list(build_brackets(energy, potential))


def _digest(mats) -> str:
    h = hashlib.sha256()
    for m in mats:
        h.update(np.round(np.asarray(m, dtype=float), 12).tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class Certificate:
    energy: float
    det88: float | None
    det1313: float | None
    closure_dim: int | None
    verdict: str
    witnesses: dict = field(default_factory=dict)
    gap: float | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {"E": self.energy, "det88": self.det88, "det1313": self.det1313,
                "closureDim": self.closure_dim, "verdict": self.verdict,
                "witnesses": dict(self.witnesses), "reason": self.reason}


def check_jump_directions(cfg: ModelConfig, spec: DistributionSpec | None) -> None:
    """The D1/D2 jump directions diag(sqrt2, 0, -sqrt2), diag(2, 0, 2) must be
    available from differences of c*omega over the support."""
    if cfg.n != 3:
        raise PreconditionError("the density certificate is built for three layers")
    if spec is None:
        return
    dirs = verify_span_condition(spec, channels=range(3)).witness * cfg.c
    base = np.linalg.matrix_rank(dirs, tol=1e-10) if dirs.size else 0
    for q in (Q_D1, Q_D2):
        if np.linalg.matrix_rank(np.vstack([dirs, q]), tol=1e-10) > base:
            raise PreconditionError(f"jump direction {q.tolist()} is not generated by c*supp(nu)")


def certify_zariski_dense(energy: float, cfg: ModelConfig | None = None,
                          spec: DistributionSpec | None = None,
                          tol: float = CLOSURE_TOL) -> Certificate:
    cfg = cfg or ModelConfig((1.0, 0.0, 1.0))
    check_jump_directions(cfg, spec)
    pot = cfg.potential
    _params(energy, pot)
    d88 = det88(energy, pot)
    if det88_vanishes(energy, pot):
        return Certificate(float(energy), d88, None, None, "UNDECIDED",
                           reason="8x8 determinant numerically zero")
    d13 = float(np.linalg.det(det1313_matrix(energy, pot)))
    if det1313_vanishes(energy, pot):
        return Certificate(float(energy), d88, d13, None, "UNDECIDED",
                           reason="13x13 determinant numerically zero")
    d1 = [build_d1(energy, l, pot) for l in range(8)]
    d2 = [build_d2(energy, l, pot) for l in range(11)]
    bs = list(build_brackets(energy, pot, check=False))
    res = lie_closure(d1 + d2 + bs, tol)
    ok = res.dim == SP3_DIM and not res.ambiguous
    wit = {"D1": _digest(d1), "D2": _digest(d2), "B": _digest(bs)}
    return Certificate(float(energy), d88, d13, res.dim, "PASS" if ok else "UNDECIDED", wit,
                       res.gap, "" if ok else f"closure dimension {res.dim}, gap {res.gap:.3g}")


@dataclass(frozen=True)
class CriticalSet:
    interval: tuple[float, float]
    zeros: tuple[float, ...]
    kind: DetKind
    splits: tuple[float, ...] = ()


def _det_function(kind: DetKind, potential: str):
    if kind is DetKind.DET88:
        return lambda e: det88(e, potential)
    return lambda e: float(np.linalg.det(det1313_matrix(e, potential)))


def _sub_intervals(lo: float, hi: float, cuts, guard: float):
    pieces, start = [], lo
    for c in sorted(cuts):
        if lo < c < hi:
            if c - guard > start:
                pieces.append((start, c - guard))
            start = c + guard
    if hi > start:
        pieces.append((start, hi))
    return pieces


def scan_critical_set(interval, grid_step: float, kind: DetKind | str = DetKind.DET88,
                      potential: str = "tridiagonal", xtol: float = 1e-10,
                      rel_zero: float = 1e-7) -> CriticalSet:
    """Zeros of a certificate determinant on ``interval``.

    Odd-order zeros come from sign changes refined by Brent's method. Even-order
    zeros (the 8x8 determinant carries squared factors) show up as local
    minima of |det| on the grid; they are refined by bounded minimisation and
    kept when |det| drops below ``rel_zero`` times the local grid maximum.
    Channel thresholds split the interval.
    """
    kind = DetKind(kind) if isinstance(kind, str) else kind
    lo, hi = map(float, interval)
    if grid_step <= 0:
        raise ParameterError("grid step must be positive")
    levels = channel_levels(potential)
    if hi <= lo:
        return CriticalSet((lo, hi), (), kind, ())
    guard = 1e-6
    cuts = tuple(float(c) for c in levels if lo < c < hi)
    f = _det_function(kind, potential)
    zeros: list[float] = []
    for a, b in _sub_intervals(lo, hi, cuts, guard):
        m = max(2, int(np.ceil((b - a) / grid_step)) + 1)
        x = np.linspace(a, b, m)
        y = np.array([f(e) for e in x])
        for i in range(m - 1):
            if y[i] == 0.0:
                zeros.append(x[i])
            elif y[i] * y[i + 1] < 0:
                zeros.append(brentq(f, x[i], x[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
        if y[-1] == 0.0:
            zeros.append(x[-1])
        ay = np.abs(y)
        for i in range(1, m - 1):
            if ay[i] <= ay[i - 1] and ay[i] <= ay[i + 1] and y[i - 1] * y[i + 1] > 0 and y[i] * y[i - 1] > 0:
                res = minimize_scalar(lambda e: abs(f(e)), bounds=(x[i - 1], x[i + 1]),
                                      method="bounded", options={"xatol": xtol})
                local = max(ay[i - 1], ay[i + 1])
                if abs(f(res.x)) <= rel_zero * local:
                    zeros.append(float(res.x))
    zeros.sort()
    merged: list[float] = []
    for z in zeros:
        if not merged or z - merged[-1] > 10 * xtol:
            merged.append(z)
    return CriticalSet((lo, hi), tuple(merged), kind, cuts)
