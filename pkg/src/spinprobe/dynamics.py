"""Population dynamics of the seven Cs m_F levels under spin exchange."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .rates import TransitionRates

M_LEVELS = tuple(range(-3, 4))
NORM_TOL = 1e-9
STIFFNESS_LIMIT = 1e12


class StiffnessError(RuntimeError):
    pass


class NoUniqueSteadyState(RuntimeError):
    pass


@dataclass(frozen=True)
class SpinDistribution:
    """Populations of m_F = -3..+3 (index 0 is m_F = -3)."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.shape != (7,):
            raise ValueError("a spin distribution has seven entries")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError(f"populations outside [0, 1]: {p}")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"populations sum to {p.sum()!r}, not 1")
        p = np.clip(p, 0.0, 1.0)
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def pure(cls, m_f: int) -> "SpinDistribution":
        if m_f not in M_LEVELS:
            raise ValueError(f"m_F must be in -3..3, got {m_f}")
        p = np.zeros(7)
        p[m_f + 3] = 1.0
        return cls(p)

    def __getitem__(self, m_f: int) -> float:
        return float(self.probabilities[m_f + 3])

    def l1(self, other: "SpinDistribution") -> float:
        return float(np.abs(self.probabilities - other.probabilities).sum())


@dataclass(frozen=True)
class RateGenerator:
    """Tridiagonal master-equation generator, G[i, j] = rate j -> i."""

    matrix: np.ndarray
    up: np.ndarray
    down: np.ndarray

    @property
    def max_out_rate(self) -> float:
        return float(np.max(-np.diag(self.matrix)))


def build_generator(r: TransitionRates) -> RateGenerator:
    up = np.asarray(r.endo, dtype=float)      # m -> m+1, from index 0..5
    down = np.asarray(r.exo, dtype=float)     # m -> m-1, from index 1..6
    if np.any(up < 0) or np.any(down < 0):
        raise ValueError("rates must be >= 0")
    g = kernels.chain_generator(up, down)
    g.flags.writeable = False
    return RateGenerator(g, up.copy(), down.copy())


def _step_plan(g: RateGenerator, span: float, horizon: float):
    positive = np.concatenate([g.up, g.down])
    positive = positive[positive > 0]
    if positive.size == 0 or span == 0:
        return 0, 0.0
    if positive.max() / positive.min() > STIFFNESS_LIMIT:
        raise StiffnessError(
            f"rate spread {positive.max() / positive.min():.3g} exceeds {STIFFNESS_LIMIT:g}")
    h = min(0.01 / g.max_out_rate, horizon / 100.0)
    n = max(1, math.ceil(span / h * (1 - 1e-12)))
    return n, span / n


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    populations: np.ndarray  # (len(times), 7), unclipped
    drift: float  # max |sum P - 1| along the trajectory


def evolve_trajectory(p0: SpinDistribution, g: RateGenerator, times) -> Trajectory:
    """RK4 integration to each requested time (ascending, >= 0).

    Populations are returned unclipped and unrenormalized; `drift` reports
    the worst deviation of the total from one.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and ascending")
    horizon = float(times[-1]) if times.size else 0.0
    out = np.empty((times.size, 7))
    p = np.array(p0.probabilities, dtype=float)
    t_prev = 0.0
    for k, t in enumerate(times):
        n, h = _step_plan(g, t - t_prev, horizon)
        if n:
            p = kernels.advance(g.up, g.down, p, h, n)
        out[k] = p
        t_prev = t
    drift = float(np.max(np.abs(out.sum(axis=1) - 1.0))) if times.size else 0.0
    return Trajectory(times, out, drift)


def evolve(p0: SpinDistribution, g: RateGenerator, t: float) -> SpinDistribution:
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    if t == 0:
        return p0
    traj = evolve_trajectory(p0, g, [t])
    return SpinDistribution(traj.populations[-1])


def evolve_many(p0: SpinDistribution, gens, t: float) -> list:
    """Evolve several generators from one initial state to the same time."""
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    if t == 0 or not gens:
        return [p0 for _ in gens]
    plans = [_step_plan(g, t, t) for g in gens]
    up = np.array([g.up for g in gens])
    down = np.array([g.down for g in gens])
    p = np.tile(p0.probabilities, (len(gens), 1))
    h = np.array([pl[1] for pl in plans])
    n = np.array([pl[0] for pl in plans], dtype=np.int64)
    out = kernels.advance_batch(up, down, p, h, n)
    return [SpinDistribution(row) for row in out]


def _closed_block(up, down):
    """The single closed communicating class of the chain as (lo, hi)."""
    n = up.size + 1
    blocks = []
    lo = 0
    for i in range(n - 1):
        if up[i] == 0 or down[i] == 0:
            blocks.append((lo, i))
            lo = i + 1
    blocks.append((lo, n - 1))
    closed = [(a, b) for a, b in blocks
              if (a == 0 or down[a - 1] == 0) and (b == n - 1 or up[b] == 0)]
    if len(closed) != 1:
        raise NoUniqueSteadyState(f"{len(closed)} closed classes; stationary state not unique")
    return closed[0]


def steady_state(r: TransitionRates) -> SpinDistribution:
    """Detailed-balance stationary state pi_{m+1} / pi_m = up_m / down_{m+1}."""
    up = np.asarray(r.endo, dtype=float)
    down = np.asarray(r.exo, dtype=float)
    lo, hi = _closed_block(up, down)
    logw = np.zeros(hi - lo + 1)
    for i in range(lo, hi):
        logw[i - lo + 1] = logw[i - lo] + math.log(up[i]) - math.log(down[i])
    w = np.exp(logw - logw.max())
    p = np.zeros(7)
    p[lo:hi + 1] = w / w.sum()
    return SpinDistribution(p)


def steady_state_nullspace(g: RateGenerator) -> SpinDistribution:
    """Solve G pi = 0, sum pi = 1 by dense linear algebra."""
    a = np.array(g.matrix, dtype=float)
    scale = np.max(np.abs(a))
    if scale == 0 or np.linalg.matrix_rank(a, tol=1e-12 * scale * a.shape[0]) != a.shape[0] - 1:
        raise NoUniqueSteadyState("generator null space is not one-dimensional")
    a = a / scale
    a[-1, :] = 1.0
    rhs = np.zeros(a.shape[0])
    rhs[-1] = 1.0
    pi = np.linalg.solve(a, rhs)
    if np.any(pi < -1e-10):
        raise NoUniqueSteadyState(f"null-space solution has negative entries: {pi}")
    return SpinDistribution(np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum())
