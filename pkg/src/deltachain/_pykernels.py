"""Pure numpy kernels; the compiled extension implements the same contracts.

All trajectory kernels share one renormalisation schedule: cells are grouped
into batches of equal length, and within a batch the frame is renormalised
after every ``block`` cells and at the batch end.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalBreakdown

NAME = "python"


def _cells(free: np.ndarray, q: np.ndarray) -> np.ndarray:
    n = q.shape[1]
    cells = np.broadcast_to(free, (q.shape[0],) + free.shape).copy()
    cells[:, n:, :] += q[:, :, None] * cells[:, :n, :]
    return cells


def _block_products(cells: np.ndarray, block: int) -> list[np.ndarray]:
    m = cells.shape[0] // block
    out = []
    if m:
        c = cells[: m * block].reshape(m, block, *cells.shape[1:])
        prod = c[:, 0]
        for j in range(1, block):
            prod = c[:, j] @ prod
        out.extend(prod)
    rest = cells[m * block:]
    if rest.shape[0]:
        prod = rest[0]
        for c in rest[1:]:
            prod = c @ prod
        out.append(prod)
    return out


def qr_trajectory(free, q, block: int, batches: int) -> np.ndarray:
    """Accumulated log R_ii of the renormalised frame, one row per batch.

    free: (2N, 2N) free-cell matrix; q: (n, N) jump strengths c*omega per
    cell, n a multiple of ``batches``. Returns (batches, 2N).
    """
    free = np.ascontiguousarray(free, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    n2 = free.shape[0]
    per = q.shape[0] // batches
    x = np.eye(n2)
    logs = np.zeros((batches, n2))
    for b in range(batches):
        for prod in _block_products(_cells(free, q[b * per:(b + 1) * per]), block):
            x, r = np.linalg.qr(prod @ x)
            d = np.diagonal(r)
            x = x * np.sign(d)
            with np.errstate(divide="ignore"):
                ld = np.log(np.abs(d))
            if not np.all(np.isfinite(ld)):
                raise NumericalBreakdown(f"frame collapsed in batch {b}")
            logs[b] += ld
    return logs


def _minor_matrix(prod: np.ndarray, subs: np.ndarray) -> np.ndarray:
    if subs.shape[1] == 1:
        return prod
    sub = prod[subs[:, None, :, None], subs[None, :, None, :]]
    return np.linalg.det(sub)


def exterior_trajectory(free, q, block: int, batches: int, subsets, vectors) -> np.ndarray:
    """Accumulated log growth of a vector under wedge^p of the product, p = 1..len(subsets).

    subsets[p-1] are the lexicographic p-subsets indexing wedge^p; vectors[p-1]
    is the start vector (unit norm). Returns (batches, pmax).
    """
    free = np.ascontiguousarray(free, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    per = q.shape[0] // batches
    vs = [np.array(v, dtype=float) for v in vectors]
    logs = np.zeros((batches, len(vs)))
    for b in range(batches):
        for prod in _block_products(_cells(free, q[b * per:(b + 1) * per]), block):
            for i, subs in enumerate(subsets):
                w = _minor_matrix(prod, subs) @ vs[i]
                nrm = np.linalg.norm(w)
                if not (nrm > 0 and np.isfinite(nrm)):
                    raise NumericalBreakdown(f"exterior vector collapsed (p={i + 1}, batch {b})")
                logs[b, i] += np.log(nrm)
                vs[i] = w / nrm
    return logs


def dirichlet_frames(frees, q) -> np.ndarray:
    """Propagate the Dirichlet frame (0; I) across all cells, one energy per free matrix.

    frees: (nE, 2N, 2N); q: (m, N). The frame is re-orthonormalised with a
    positive-diagonal triangular factor after every cell, which preserves
    the Lagrangian plane and the argument of det(U - iV). Returns (nE, 2N, N).
    """
    frees = np.ascontiguousarray(frees, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    ne, n2, _ = frees.shape
    n = n2 // 2
    y = np.zeros((ne, n2, n))
    y[:, n:, :] = np.eye(n)
    for t in range(q.shape[0]):
        y = frees @ y
        y[:, n:, :] += q[t][None, :, None] * y[:, :n, :]
        y, r = np.linalg.qr(y)
        y = y * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
    return y


def band_inertia(ab, pivot_tol: float = 1e-13) -> int:
    """Number of negative pivots of the LDL^T factorisation of a symmetric band matrix.

    ab[d, i] = A[i, i + d] for d = 0..b. Returns -1 when a pivot falls below
    ``pivot_tol`` times the largest diagonal magnitude.
    """
    ab = np.array(ab, dtype=float)
    bw, n = ab.shape[0] - 1, ab.shape[1]
    floor = pivot_tol * np.abs(ab[0]).max()
    rows = [row.tolist() for row in ab]
    neg = 0
    for k in range(n):
        d = rows[0][k]
        if abs(d) <= floor:
            return -1
        if d < 0:
            neg += 1
        top = min(bw, n - 1 - k)
        ell = [rows[j][k] / d for j in range(1, top + 1)]
        for i in range(1, top + 1):
            li = ell[i - 1] * d
            for j in range(i, top + 1):
                rows[j - i][k + i] -= li * ell[j - 1]
    return neg
