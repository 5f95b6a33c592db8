"""Finite-volume integrated density of states on D = [-L, L] with Dirichlet ends.

Cells are indexed n = -L..L-1 and cross (n, n+1]; the jump of cell n sits at
n+1 with strength c * omega^(n). The jump at x = L is dropped (it would act
on the boundary node), so interior integers -L+1..L-1 carry omega^(-L)..omega^(L-2).

Two counting methods:

* ``shoot_count``: the Dirichlet frame (0; I) at -L is carried to L with the
  transfer matrices. E is an eigenvalue iff det T12 = 0, i.e. iff the unitary
  W = (U - iV)(U + iV)^-1 built from the frame's (u, u') blocks has
  eigenvalue -1. At fixed E, eigenphases of W pass -1 only forwards as x
  grows; counting those passages over (-L, L) gives the number of
  eigenvalues below E (Morse index theorem).
* ``inertia_count``: negative inertia of a banded finite-difference matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, symplectic
from .errors import NumericalBreakdown, ParameterError, PreconditionError
from .sampling import DistributionSpec, SampleStream
from .transfer import ModelConfig, free_transfer, hamiltonian_block

PI_TOL = 1e-9


@dataclass(frozen=True)
class DirichletDomain:
    L: int
    omegas: np.ndarray
    seed: int | None = None
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ParameterError("L must be a positive integer")
        om = np.asarray(self.omegas, dtype=float)
        if om.ndim != 2 or om.shape[0] != 2 * self.L:
            raise ParameterError(f"realization needs 2L = {2 * self.L} omega vectors")
        om.setflags(write=False)
        object.__setattr__(self, "omegas", om)

    def jumps(self, cfg: ModelConfig) -> np.ndarray:
        """Jump strengths per cell; the last cell (ending at x = L) has none."""
        if self.omegas.shape[1] != cfg.n:
            raise ParameterError("realization and model disagree on N")
        q = self.omegas * cfg.c
        q[-1] = 0.0
        return q


def make_domain(spec: DistributionSpec, seed: int, L: int, key: tuple[int, ...] = ()) -> DirichletDomain:
    return DirichletDomain(L, SampleStream(spec, seed, key).sample(2 * L), seed, tuple(key))


def free_domain(n: int, L: int) -> DirichletDomain:
    return DirichletDomain(L, np.zeros((2 * L, n)))


def spectrum_floor(cfg: ModelConfig, q: np.ndarray) -> float:
    """Energy strictly below the Dirichlet spectrum.

    The form of H dominates -d^2 + V0 with every site carrying the most
    attractive jump -g; a periodic comb of strength -g has band bottom
    -kappa^2 with kappa tanh(kappa/2) = g/2.
    """
    g = max(0.0, -float(np.min(q))) if q.size else 0.0
    kappa = 0.0
    if g > 0:
        lo, hi = 0.0, max(1.0, g)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid * math.tanh(mid / 2) < g / 2:
                lo = mid
            else:
                hi = mid
        kappa = hi
    return -float(np.linalg.norm(cfg.v0, 2)) - kappa * kappa - 1.0


def _phase_data(frames: np.ndarray, n: int):
    """2 arg det(U - iV), the sum of principal eigenphases of W, and how many sit at -1."""
    u, v = frames[:, :n, :], frames[:, n:, :]
    a = u - 1j * v
    theta = 2.0 * np.angle(np.linalg.det(a))
    ph = np.angle(np.linalg.eigvals(a @ np.linalg.inv(u + 1j * v)))
    near_pi = np.abs(np.abs(ph) - math.pi) <= PI_TOL
    ph = np.where(near_pi, math.pi, ph)
    return theta, ph.sum(axis=1), near_pi.sum(axis=1)


def substeps_per_cell(cfg: ModelConfig, energy: float) -> int:
    """Substeps that keep every eigenphase of W moving less than pi / (4N) per step.

    Along x the eigenphases turn no faster than 2 ||S||, S = diag(E - V0, I)
    being the symmetric generator of the free flow.
    """
    s = max(1.0, float(np.linalg.norm(cfg.v0 - energy * np.eye(cfg.n), 2)))
    return int(math.ceil(8 * cfg.n * s / math.pi))


def phase_counts(domain: DirichletDomain, cfg: ModelConfig, energies,
                 backend=None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue counts <= E at each energy, plus how many eigenphases sit on -1.

    At fixed E the Dirichlet frame is carried across [-L, L] in substeps short
    enough to unwrap 2 arg det(U - iV); every passage of an eigenphase of W
    through -1 is a conjugate point, and by the Morse index theorem their
    number is the count of eigenvalues below E. Jumps leave U unchanged and
    so never cross. Energies are processed together but independently.
    """
    e = np.asarray(energies, dtype=float)
    if e.size == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    if not np.all(np.isfinite(e)):
        raise ParameterError("energies must be finite")
    q = domain.jumps(cfg)
    n = cfg.n
    steps = max(substeps_per_cell(cfg, x) for x in e)
    sub = np.array([symplectic.expm(hamiltonian_block(cfg, x) / steps) for x in e])
    y = np.zeros((e.size, 2 * n, n))
    y[:, n:, :] = np.eye(n)
    theta, _, _ = _phase_data(y, n)
    # W = -I at x = -L; the phases leave -1 forwards, so start them at -pi
    psum = np.full(e.size, -n * math.pi)
    crossings = np.zeros(e.size)
    for t in range(q.shape[0]):
        for _ in range(steps):
            y = sub @ y
            th, ps, _ = _phase_data(y, n)
            dth = np.angle(np.exp(1j * (th - theta)))
            crossings += (dth - (ps - psum)) / (2 * math.pi)
            theta, psum = th, ps
        y[:, n:, :] += q[t][None, :, None] * y[:, :n, :]
        y = np.linalg.qr(y)[0]
        theta, psum, _ = _phase_data(y, n)
    _, _, npi = _phase_data(y, n)
    below = np.rint(crossings).astype(int)
    if np.max(np.abs(crossings - below), initial=0.0) > 1e-3 or np.any(below < 0):
        raise NumericalBreakdown("conjugate-point count is not a nonnegative integer")
    return below + npi, npi


def shoot_count(domain: DirichletDomain, cfg: ModelConfig, energy: float, backend=None) -> int:
    """Number of Dirichlet eigenvalues <= E (with multiplicity)."""
    return int(phase_counts(domain, cfg, [energy], backend)[0][0])


def dirichlet_eigenvalues(domain: DirichletDomain, cfg: ModelConfig, upper: float,
                          tol: float = 1e-10, backend=None) -> np.ndarray:
    """Eigenvalues <= ``upper`` by bisection on the counting function, repeated by multiplicity."""
    q = domain.jumps(cfg)
    lo = spectrum_floor(cfg, q)
    total = shoot_count(domain, cfg, upper, backend)
    out: list[float] = []

    def split(a, ca, b, cb):
        if cb == ca:
            return
        if b - a <= tol * max(1.0, abs(b)):
            out.extend([0.5 * (a + b)] * (cb - ca))
            return
        m = 0.5 * (a + b)
        cm = shoot_count(domain, cfg, m, backend)
        split(a, ca, m, cm)
        split(m, cm, b, cb)

    split(lo, 0, float(upper), total)
    return np.asarray(out)


def t12_rank_deficiency(domain: DirichletDomain, cfg: ModelConfig, energy: float,
                        tol: float = 1e-8, backend=None) -> int:
    """N - rank T12(E): the multiplicity of E as a Dirichlet eigenvalue."""
    q = domain.jumps(cfg)
    frame = kernels.get(backend).dirichlet_frames(free_transfer(cfg, energy)[None], q)[0]
    s = np.linalg.svd(frame[:cfg.n], compute_uv=False)
    return int(np.sum(s <= tol))


def fd_band(domain: DirichletDomain, cfg: ModelConfig, mesh_points: int) -> tuple[np.ndarray, float]:
    """Upper band storage ab[d, i] = A[i, i + d] of the finite-difference operator.

    Nodes x_j = -L + j/m, j = 1..2Lm-1, ordered node-major with the N
    channels contiguous. The jump at an interior integer enters as c*omega/h
    on that node's diagonal.
    """
    m, n, L = int(mesh_points), cfg.n, domain.L
    h = 1.0 / m
    nodes = 2 * L * m - 1
    size = nodes * n
    ab = np.zeros((n + 1, size))
    diag = np.tile(np.diag(cfg.v0) + 2.0 / h ** 2, nodes)
    q = domain.jumps(cfg)
    for i in range(1, 2 * L):
        j = i * m - 1
        diag[j * n:(j + 1) * n] += q[i - 1] / h
    ab[0] = diag
    for d in range(1, n):
        band = np.zeros(size)
        for a in range(n - d):
            band[a::n] = cfg.v0[a, a + d]
        ab[d] = band
    ab[n, : size - n] = -1.0 / h ** 2
    return ab, h


def inertia_count(domain: DirichletDomain, cfg: ModelConfig, energy: float,
                  mesh_points: int = 400, backend=None, retries: int = 5) -> int:
    """Negative inertia of A_h - E from a banded LDL^T sweep."""
    if mesh_points < 50:
        raise PreconditionError("mesh_points must be at least 50")
    ab, _ = fd_band(domain, cfg, mesh_points)
    kern = kernels.get(backend)
    e = float(energy)
    for _ in range(retries):
        shifted = ab.copy()
        shifted[0] -= e
        neg = kern.band_inertia(shifted)
        if neg >= 0:
            return int(neg)
        e += 1e-12 * max(1.0, abs(e))
    raise NumericalBreakdown(f"LDL^T pivot breakdown persists near E={energy}")


@dataclass(frozen=True)
class IDSCurve:
    grid: np.ndarray
    counts: np.ndarray
    values: np.ndarray
    L: int
    seed: int | None
    method: str = "shoot"


def ids_curve(cfg: ModelConfig, spec: DistributionSpec | None, seed: int | None, L: int, grid,
              method: str = "shoot", mesh_points: int = 400, key: tuple[int, ...] = (),
              domain: DirichletDomain | None = None, backend=None) -> IDSCurve:
    grid = np.asarray(grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) < 0):
        raise PreconditionError("IDS grid must be sorted")
    if domain is None:
        domain = make_domain(spec, seed, L, key) if spec is not None else free_domain(cfg.n, L)
    if method == "shoot":
        counts = phase_counts(domain, cfg, grid, backend)[0]
    elif method == "inertia":
        counts = np.array([inertia_count(domain, cfg, e, mesh_points, backend) for e in grid], dtype=int)
    else:
        raise ParameterError(f"unknown counting method {method!r}")
    return IDSCurve(grid, counts, counts / (2.0 * domain.L), domain.L, seed, method)


def free_count(L: int, energy: float) -> int:
    """Dirichlet eigenvalues (k pi / 2L)^2 <= E of -u'' on [-L, L]."""
    return int(math.floor(2 * L * math.sqrt(energy) / math.pi)) if energy > 0 else 0
