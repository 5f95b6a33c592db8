# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Contracts and schedules match deltachain._pykernels."""

import numpy as np

from libc.math cimport fabs, isfinite, log, sqrt

from .errors import NumericalBreakdown

NAME = "cython"

DEF MAXP = 8


cdef inline void _step(const double[:, ::1] a, const double[::1] q, double[:, ::1] x,
                       double[:, ::1] tmp, int n2, int cols) noexcept nogil:
    cdef int r, c, k, n = n2 // 2
    cdef double s
    for r in range(n2):
        for c in range(cols):
            s = 0.0
            for k in range(n2):
                s += a[r, k] * x[k, c]
            tmp[r, c] = s
    for r in range(n):
        for c in range(cols):
            x[r, c] = tmp[r, c]
            x[n + r, c] = tmp[n + r, c] + q[r] * tmp[r, c]


cdef int _mgs(double[:, ::1] x, int rows, int cols, double* logs) noexcept nogil:
    # Modified Gram-Schmidt with one reorthogonalisation pass; R diagonal > 0.
    cdef int i, j, r, rep
    cdef double dot, nrm
    for j in range(cols):
        for rep in range(2):
            for i in range(j):
                dot = 0.0
                for r in range(rows):
                    dot += x[r, i] * x[r, j]
                for r in range(rows):
                    x[r, j] -= dot * x[r, i]
        nrm = 0.0
        for r in range(rows):
            nrm += x[r, j] * x[r, j]
        nrm = sqrt(nrm)
        if not (nrm > 0.0 and isfinite(nrm)):
            return -1
        for r in range(rows):
            x[r, j] /= nrm
        if logs != NULL:
            logs[j] += log(nrm)
    return 0


def qr_trajectory(free, q, int block, int batches):
    cdef double[:, ::1] a = np.ascontiguousarray(free, dtype=np.float64)
    cdef double[:, ::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef int n2 = a.shape[0]
    cdef Py_ssize_t steps = qq.shape[0]
    cdef Py_ssize_t per = steps // batches
    cdef double[:, ::1] x = np.eye(n2)
    cdef double[:, ::1] tmp = np.empty((n2, n2))
    logs_arr = np.zeros((batches, n2))
    cdef double[:, ::1] logs = logs_arr
    cdef Py_ssize_t t, b, since
    cdef int bad = 0
    with nogil:
        for b in range(batches):
            since = 0
            for t in range(b * per, (b + 1) * per):
                _step(a, qq[t], x, tmp, n2, n2)
                since += 1
                if since == block or t == (b + 1) * per - 1:
                    since = 0
                    if _mgs(x, n2, n2, &logs[b, 0]) < 0:
                        bad = 1
                        break
            if bad:
                break
    if bad:
        raise NumericalBreakdown(f"frame collapsed in batch {b}")
    return logs_arr


cdef double _det_small(double* m, int p) noexcept nogil:
    # Gaussian elimination with partial pivoting on a row-major p x p scratch array.
    cdef int i, j, k, piv
    cdef double det = 1.0, best, f, t
    for k in range(p):
        piv = k
        best = fabs(m[k * p + k])
        for i in range(k + 1, p):
            if fabs(m[i * p + k]) > best:
                best = fabs(m[i * p + k])
                piv = i
        if best == 0.0:
            return 0.0
        if piv != k:
            for j in range(p):
                t = m[k * p + j]
                m[k * p + j] = m[piv * p + j]
                m[piv * p + j] = t
            det = -det
        det *= m[k * p + k]
        for i in range(k + 1, p):
            f = m[i * p + k] / m[k * p + k]
            for j in range(k + 1, p):
                m[i * p + j] -= f * m[k * p + j]
    return det


cdef int _wedge_apply(const double[:, ::1] prod, const long[:, :, ::1] subs, int p, int count,
                      double[:, ::1] vecs, double[::1] out, double* logacc) noexcept nogil:
    cdef int s, t, i, j
    cdef double m[MAXP * MAXP]
    cdef double acc, nrm = 0.0
    for s in range(count):
        acc = 0.0
        for t in range(count):
            if vecs[p - 1, t] == 0.0:
                continue
            for i in range(p):
                for j in range(p):
                    m[i * p + j] = prod[subs[p - 1, s, i], subs[p - 1, t, j]]
            acc += _det_small(m, p) * vecs[p - 1, t]
        out[s] = acc
        nrm += acc * acc
    nrm = sqrt(nrm)
    if not (nrm > 0.0 and isfinite(nrm)):
        return -1
    for s in range(count):
        vecs[p - 1, s] = out[s] / nrm
    logacc[0] += log(nrm)
    return 0


def exterior_trajectory(free, q, int block, int batches, subsets, vectors):
    cdef int pmax = len(subsets)
    if pmax > MAXP:
        raise ValueError(f"compiled exterior kernel supports p <= {MAXP}")
    cdef double[:, ::1] a = np.ascontiguousarray(free, dtype=np.float64)
    cdef double[:, ::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef int n2 = a.shape[0]
    cdef int cmax = max(len(s) for s in subsets)
    subs_arr = np.zeros((pmax, cmax, pmax), dtype=np.int_)
    vec_arr = np.zeros((pmax, cmax))
    counts_arr = np.zeros(pmax, dtype=np.int32)
    for i, (s, v) in enumerate(zip(subsets, vectors)):
        s = np.asarray(s)
        subs_arr[i, :s.shape[0], :s.shape[1]] = s
        vec_arr[i, :s.shape[0]] = v
        counts_arr[i] = s.shape[0]
    cdef const long[:, :, ::1] subs = subs_arr
    cdef double[:, ::1] vecs = vec_arr
    cdef int[::1] counts = counts_arr
    cdef Py_ssize_t steps = qq.shape[0]
    cdef Py_ssize_t per = steps // batches
    cdef double[:, ::1] prod = np.eye(n2)
    cdef double[:, ::1] tmp = np.empty((n2, n2))
    cdef double[::1] out = np.empty(cmax)
    logs_arr = np.zeros((batches, pmax))
    cdef double[:, ::1] logs = logs_arr
    cdef Py_ssize_t t, b, since
    cdef int p, r, c, bad = 0, badp = 0
    with nogil:
        for b in range(batches):
            since = 0
            for r in range(n2):
                for c in range(n2):
                    prod[r, c] = 1.0 if r == c else 0.0
            for t in range(b * per, (b + 1) * per):
                _step(a, qq[t], prod, tmp, n2, n2)
                since += 1
                if since == block or t == (b + 1) * per - 1:
                    since = 0
                    for p in range(1, pmax + 1):
                        if _wedge_apply(prod, subs, p, counts[p - 1], vecs, out, &logs[b, p - 1]) < 0:
                            bad = 1
                            badp = p
                            break
                    if bad:
                        break
                    for r in range(n2):
                        for c in range(n2):
                            prod[r, c] = 1.0 if r == c else 0.0
            if bad:
                break
    if bad:
        raise NumericalBreakdown(f"exterior vector collapsed (p={badp}, batch {b})")
    return logs_arr


def dirichlet_frames(frees, q):
    cdef double[:, :, ::1] f = np.ascontiguousarray(frees, dtype=np.float64)
    cdef double[:, ::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef int ne = f.shape[0], n2 = f.shape[1], n = n2 // 2
    out_arr = np.zeros((ne, n2, n))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] x = np.empty((n2, n))
    cdef double[:, ::1] tmp = np.empty((n2, n))
    cdef Py_ssize_t e, t
    cdef int r, c, bad = 0
    with nogil:
        for e in range(ne):
            for r in range(n2):
                for c in range(n):
                    x[r, c] = 1.0 if r == n + c else 0.0
            for t in range(qq.shape[0]):
                _step(f[e], qq[t], x, tmp, n2, n)
                if _mgs(x, n2, n, NULL) < 0:
                    bad = 1
                    break
            if bad:
                break
            for r in range(n2):
                for c in range(n):
                    out[e, r, c] = x[r, c]
    if bad:
        raise NumericalBreakdown("Dirichlet frame collapsed")
    return out_arr


def band_inertia(ab, double pivot_tol=1e-13):
    work = np.array(ab, dtype=np.float64, order="C")
    cdef double[:, ::1] w = work
    cdef int bw = w.shape[0] - 1
    cdef Py_ssize_t n = w.shape[1], k
    cdef int i, j, top, neg = 0
    cdef double d, li, floor = pivot_tol * np.abs(work[0]).max()
    cdef double ell[64]
    if bw > 64:
        raise ValueError("band too wide for the compiled kernel")
    with nogil:
        for k in range(n):
            d = w[0, k]
            if fabs(d) <= floor:
                neg = -1
                break
            if d < 0:
                neg += 1
            top = bw if bw < n - 1 - k else <int>(n - 1 - k)
            for j in range(1, top + 1):
                ell[j - 1] = w[j, k] / d
            for i in range(1, top + 1):
                li = ell[i - 1] * d
                for j in range(i, top + 1):
                    w[j - i, k + i] -= li * ell[j - 1]
    return neg
