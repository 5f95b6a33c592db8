"""One-cell transfer matrices of the coupled-layer point-interaction operator.

A cell (n, n+1] is crossed by free propagation under -u'' + V0 u = E u,
followed by the derivative jump u'(n+1)+ = u'(n+1)- + diag(c * omega) u(n+1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import symplectic
from .errors import ParameterError, RegimeError

SQRT2 = np.sqrt(2.0)
BOUNDARY_GUARD = 1e-12

POTENTIALS = ("tridiagonal", "lifted")


def build_u() -> np.ndarray:
    """Orthogonal eigenbasis of the three-layer coupling matrix (columns)."""
    return 0.5 * np.array([[-SQRT2, 1.0, 1.0],
                           [0.0, SQRT2, -SQRT2],
                           [SQRT2, 1.0, 1.0]])


def tridiagonal_v0(n: int) -> np.ndarray:
    v0 = np.zeros((n, n))
    idx = np.arange(n - 1)
    v0[idx, idx + 1] = 1.0
    v0[idx + 1, idx] = 1.0
    return v0


def channel_levels(potential: str) -> np.ndarray:
    """Eigenvalues of the N=3 coupling matrix, ordered like the columns of build_u()."""
    if potential == "tridiagonal":
        return np.array([0.0, SQRT2, -SQRT2])
    if potential == "lifted":
        return np.array([1.0, SQRT2, -SQRT2])
    raise ParameterError(f"unknown potential {potential!r}; expected one of {POTENTIALS}")


def lifted_v0() -> np.ndarray:
    """U diag(1, sqrt2, -sqrt2) U^T: the three-layer coupling with its zero mode raised to 1."""
    u = build_u()
    return u @ np.diag(channel_levels("lifted")) @ u.T


@dataclass(frozen=True)
class ModelConfig:
    couplings: tuple[float, ...]
    potential: str = "tridiagonal"
    v0: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = tuple(float(x) for x in self.couplings)
        if not c:
            raise ParameterError("at least one layer is required")
        if not all(np.isfinite(c)):
            raise ParameterError("couplings must be finite")
        object.__setattr__(self, "couplings", c)
        if self.potential == "tridiagonal":
            v0 = tridiagonal_v0(len(c))
        elif self.potential == "lifted":
            if len(c) != 3:
                raise ParameterError("the lifted potential is defined for three layers only")
            v0 = lifted_v0()
        else:
            raise ParameterError(f"unknown potential {self.potential!r}")
        v0.setflags(write=False)
        object.__setattr__(self, "v0", v0)

    @property
    def n(self) -> int:
        return len(self.couplings)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.couplings)

    def levels(self) -> np.ndarray:
        if self.n != 3:
            raise ParameterError("channel levels are tabulated for N=3 only")
        return channel_levels(self.potential)

    def boundary_energies(self) -> np.ndarray:
        return np.sort(self.levels())


class Regime(enum.Enum):
    HIGH = "HIGH"
    MID_HIGH = "MID_HIGH"
    MID_LOW = "MID_LOW"
    LOW = "LOW"
    BOUNDARY = "BOUNDARY"


@dataclass(frozen=True)
class RegimeParams:
    regime: Regime
    k: tuple[float, float, float]
    circular: tuple[bool, bool, bool]

    @property
    def alpha(self):
        return self.k[0]

    @property
    def beta(self):
        return self.k[1]

    @property
    def gamma(self):
        return self.k[2]


def regime_params(energy: float, potential: str = "tridiagonal") -> RegimeParams:
    """Wave numbers sqrt|E - level| per channel and whether each channel oscillates."""
    levels = channel_levels(potential)
    e = float(energy)
    gap = e - levels
    if np.any(np.abs(gap) <= BOUNDARY_GUARD * max(1.0, abs(e))):
        return RegimeParams(Regime.BOUNDARY, (0.0, 0.0, 0.0), (False, False, False))
    above = int(np.sum(gap > 0))
    regime = (Regime.LOW, Regime.MID_LOW, Regime.MID_HIGH, Regime.HIGH)[above]
    return RegimeParams(regime, tuple(np.sqrt(np.abs(gap)).tolist()),
                        tuple(bool(g > 0) for g in gap))


def rotation_power(params: RegimeParams, power: int = 1) -> np.ndarray:
    """R^power in the diagonal channel basis, exact for any integer power."""
    if params.regime is Regime.BOUNDARY:
        raise RegimeError("closed form is undefined on a channel threshold")
    r = np.zeros((6, 6))
    for i, (k, circ) in enumerate(zip(params.k, params.circular)):
        x = power * k
        if circ:
            cs, sn, lower = np.cos(x), np.sin(x), -k * np.sin(x)
        else:
            cs, sn, lower = np.cosh(x), np.sinh(x), k * np.sinh(x)
        r[i, i] = r[i + 3, i + 3] = cs
        r[i, i + 3] = sn / k
        r[i + 3, i] = lower
    return r


def hamiltonian_block(cfg: ModelConfig, energy: float) -> np.ndarray:
    n = cfg.n
    zero = np.zeros((n, n))
    return np.block([[zero, np.eye(n)], [cfg.v0 - energy * np.eye(n), zero]])


def free_transfer(cfg: ModelConfig, energy: float, method: str = "auto") -> np.ndarray:
    """Transfer matrix across one free cell, from n+ to (n+1)-.

    method="closed" uses the diagonalised form (N=3 only, off thresholds),
    "expm" the matrix exponential of the Hamiltonian block, "auto" picks the
    closed form when it applies.
    """
    if not np.isfinite(energy):
        raise ParameterError("energy must be finite")
    if method == "auto":
        if cfg.n == 3 and regime_params(energy, cfg.potential).regime is not Regime.BOUNDARY:
            method = "closed"
        else:
            method = "expm"
    if method == "expm":
        return symplectic.expm(hamiltonian_block(cfg, energy))
    if method != "closed":
        raise ParameterError(f"unknown method {method!r}")
    if cfg.n != 3:
        raise ParameterError("closed-form free transfer exists for N=3 only")
    params = regime_params(energy, cfg.potential)
    if params.regime is Regime.BOUNDARY:
        raise RegimeError(f"E={energy} is a channel threshold; use method='expm'")
    u = build_u()
    bu = np.zeros((6, 6))
    bu[:3, :3] = bu[3:, 3:] = u
    return bu @ rotation_power(params) @ bu.T


def jump_matrix(q) -> np.ndarray:
    """M(diag q) = [[I, 0], [diag q, I]]."""
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ParameterError("jump strengths must be finite")
    n = q.size
    m = np.eye(2 * n)
    m[n:, :n] = np.diag(q)
    return m


def cell_transfer(cfg: ModelConfig, energy: float, omega, method: str = "auto") -> np.ndarray:
    """Full cell map M(diag(c * omega)) @ A_free(E)."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (cfg.n,):
        raise ParameterError(f"omega must have shape ({cfg.n},), got {omega.shape}")
    if not np.all(np.isfinite(omega)):
        raise ParameterError("omega must be finite")
    return jump_matrix(cfg.c * omega) @ free_transfer(cfg, energy, method)


def apply_jumps(cells: np.ndarray, q: np.ndarray) -> np.ndarray:
    """In-place left multiplication of a stack of matrices by M(diag q_t)."""
    n = q.shape[-1]
    cells[..., n:, :] += q[..., :, None] * cells[..., :n, :]
    return cells


def norm_bound_excess(cfg: ModelConfig, energies, omegas, p: int) -> np.ndarray:
    """log ||wedge^p A||^2 - p|E| - p for paired samples of (E, omega)."""
    energies = np.asarray(energies, dtype=float)
    out = np.empty(energies.size)
    for i, (e, w) in enumerate(zip(energies, omegas)):
        a = cell_transfer(cfg, e, w)
        out[i] = 2.0 * np.log(symplectic.exterior_power_norm(a, p)) - p * abs(e) - p
    return out


def lipschitz_quotients(cfg: ModelConfig, energies, omega, p: int) -> np.ndarray:
    """||wedge^p A(E_i) - wedge^p A(E_{i+1})|| / |E_i - E_{i+1}| along a sorted grid."""
    energies = np.asarray(energies, dtype=float)
    powers = [symplectic.exterior_power(cell_transfer(cfg, e, omega, method="expm"), p)
              for e in energies]
    diffs = [np.linalg.norm(b - a, 2) for a, b in zip(powers[:-1], powers[1:])]
    return np.asarray(diffs) / np.abs(np.diff(energies))
