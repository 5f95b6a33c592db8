"""Dense small-matrix layer: symplectic form, matrix exponential, exterior powers."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import DimensionError, ParameterError

SYMPLECTIC_TOL = 1e-9

# Pade approximant coefficients and theta_m bounds for double precision
# (Higham 2005, "The scaling and squaring method for the matrix exponential revisited").
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068, 13: 5.371920351148152}
_UNIT_ROUNDOFF = 2.0 ** -53


def symplectic_form(n: int) -> np.ndarray:
    """Return J = [[0, -I_n], [I_n, 0]]."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def symplectic_defect(m) -> float:
    """Frobenius norm of M^T J M - J."""
    m = _as_square(m)
    if m.shape[0] % 2:
        raise DimensionError(f"symplectic defect needs an even dimension, got {m.shape[0]}")
    j = symplectic_form(m.shape[0] // 2)
    return float(np.linalg.norm(m.T @ j @ m - j))


def is_symplectic(m, tol: float = SYMPLECTIC_TOL) -> bool:
    m = _as_square(m)
    return symplectic_defect(m) <= tol * (1.0 + np.linalg.norm(m) ** 2)


def symplectic_inverse(m) -> np.ndarray:
    """Inverse of a symplectic matrix, -J M^T J."""
    m = _as_square(m)
    j = symplectic_form(m.shape[0] // 2)
    return -j @ m.T @ j


def _pade(a: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE_COEFFS[m]
    ident = np.eye(a.shape[0])
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
        return u, v
    powers = [ident, a2]
    while len(powers) < (m + 1) // 2:
        powers.append(powers[-1] @ a2)
    u = a @ sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
    v = sum(b[2 * k] * powers[k] for k in range(len(powers)))
    return u, v


def expm(m, tol: float = 1e-12) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Pade kernel.

    The degree and scaling are chosen so that the backward error stays below
    the unit roundoff, which is below any admissible ``tol``.
    """
    a = _as_square(m)
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix exponential input has non-finite entries")
    if tol < _UNIT_ROUNDOFF:
        raise ParameterError(f"tol={tol} is below double-precision unit roundoff")
    n1 = np.linalg.norm(a, 1)
    for deg in (3, 5, 7, 9):
        if n1 <= _THETA[deg]:
            u, v = _pade(a, deg)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(np.ceil(np.log2(n1 / _THETA[13])))) if n1 > 0 else 0
    u, v = _pade(a / 2.0 ** s, 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


@lru_cache(maxsize=None)
def subsets(n: int, p: int) -> np.ndarray:
    """Strictly increasing p-subsets of range(n), lexicographic, as an int array."""
    return np.array(list(itertools.combinations(range(n), p)), dtype=np.intp).reshape(-1, p)


def exterior_power(m, p: int) -> np.ndarray:
    """p-th exterior power: entry (S, T) is the minor det M[S, T]."""
    m = _as_square(m)
    n = m.shape[0]
    if not 1 <= p <= n:
        raise ParameterError(f"exterior degree p={p} outside 1..{n}")
    idx = subsets(n, p)
    if p == 1:
        return m.copy()
    sub = m[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(sub)


def exterior_power_norm(m, p: int) -> float:
    """Operator 2-norm of the p-th exterior power: product of the p largest singular values."""
    sv = np.linalg.svd(_as_square(m), compute_uv=False)
    return float(np.prod(sv[:p]))
