"""Fraction of thermal collisions able to pay the endoergic Zeeman cost.

With x = E_Z / E_th = mu_B B / (4 k_B T) the Maxwell-Boltzmann tail above
the threshold is

    p = erfc(sqrt(x)) + 2 sqrt(x / pi) exp(-x),

so p depends on (B, T) only through the energy ratio r = 1 / x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .units import DEFAULT_CONSTANTS, BTPoint, PhysicalConstants, zeeman_gap

REFERENCE_FIT = (-1.29, 2.29, 0.35, -1.43)


class FitError(RuntimeError):
    """Raised when the fit does not converge; carries the best parameters seen."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


def _tail(x):
    x = np.asarray(x, dtype=float)
    sx = np.sqrt(x)
    return erfc(sx) + 2.0 * sx / math.sqrt(math.pi) * np.exp(-x)


def _barrier(p: BTPoint, constants: PhysicalConstants) -> float:
    if not p.temperature > 0:
        raise ValueError("temperature must be > 0")
    return zeeman_gap(p.b_field, constants) / (constants.boltzmann * p.temperature)


def endo_fraction(p: BTPoint, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    return float(_tail(_barrier(p, constants)))


def mb_energy_density(e, kt):
    """Maxwell-Boltzmann density of collision energies (e and kt in one unit)."""
    e = np.asarray(e, dtype=float)
    return 2.0 * np.sqrt(e / math.pi) * kt ** -1.5 * np.exp(-e / kt)


def endo_fraction_quadrature(p: BTPoint, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Adaptive-quadrature value of the tail integral (independent of erfc)."""
    x = _barrier(p, constants)
    # integrate in units of k_B T so the integrand is O(1)
    val, _ = integrate.quad(lambda e: mb_energy_density(e, 1.0), x, np.inf,
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def fraction_of_ratio(e_ratio):
    r = np.asarray(e_ratio, dtype=float)
    if np.any(~(r > 0)):
        raise ValueError("e_ratio must be > 0")
    out = _tail(1.0 / r)
    return float(out) if out.ndim == 0 else out


def ratio_of_fraction(p: float, tol: float = 1e-10) -> float:
    """Energy ratio at which the endoergic fraction equals p (bisection in log r)."""
    if not 0 < p < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {p}")
    lo, hi = 1e-4, 1e4
    while fraction_of_ratio(lo) > p:
        lo /= 10.0
    while fraction_of_ratio(hi) < p:
        hi *= 10.0
    while hi - lo > tol:
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        if fraction_of_ratio(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def refine_peak(x, y, i):
    """Vertex of the parabola through the three samples around index i."""
    if i <= 0 or i >= len(x) - 1:
        return float(x[i])
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a >= 0:
        return float(x1)
    return float(min(max(-b / (2 * a), x0), x2))


@dataclass(frozen=True)
class FractionDerivatives:
    grid: np.ndarray
    values: np.ndarray
    first: np.ndarray
    second: np.ndarray
    first_argmax: float
    second_argmax: float


def fraction_derivatives(grid, rel_step: float = 1e-5) -> FractionDerivatives:
    """Central-difference derivatives of p(r) on the closed form."""
    r = np.asarray(grid, dtype=float)
    if r.ndim != 1 or r.size < 100:
        raise ValueError("derivative grid needs at least 100 points")
    if np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ValueError("derivative grid must be positive and strictly ascending")
    h = rel_step * r
    f0 = fraction_of_ratio(r)
    fp = fraction_of_ratio(r + h)
    fm = fraction_of_ratio(r - h)
    first = (fp - fm) / (2 * h)
    # a wider step keeps the second difference out of cancellation noise
    h2 = 1e3 * h
    second = (fraction_of_ratio(r + h2) - 2 * f0 + fraction_of_ratio(r - h2)) / h2 ** 2
    i1 = int(np.argmax(first))
    i2 = int(np.argmax(second))
    return FractionDerivatives(r, f0, first, second,
                               refine_peak(r, first, i1), refine_peak(r, second, i2))


def fit_model(x, params):
    a, b, c, d = params
    return a / (1.0 - b * np.exp(c * np.asarray(x, dtype=float) ** d))


def _fit_jacobian(x, params):
    a, b, c, d = params
    xd = x ** d
    e = np.exp(c * xd)
    den = 1.0 - b * e
    g = a / den ** 2  # d f / d(-den)
    return np.column_stack([
        1.0 / den,
        g * e,
        g * b * e * xd,
        g * b * e * c * xd * np.log(x),
    ])


@dataclass(frozen=True)
class FitParams:
    a: float
    b: float
    c: float
    d: float
    rms: float
    iterations: int
    converged: bool

    def __call__(self, x):
        return fit_model(x, (self.a, self.b, self.c, self.d))


def fit_fraction(grid, initial=REFERENCE_FIT, max_iter: int = 200, tol: float = 1e-12) -> FitParams:
    """Levenberg-Marquardt fit of a / (1 - b exp(c x^d)) to p on the grid."""
    x = np.asarray(grid, dtype=float)
    if x.min() > 0.1 or x.max() < 2.5:
        raise ValueError("fit grid must span at least [0.1, 2.5]")
    y = fraction_of_ratio(x)
    beta = np.array(initial, dtype=float)

    def rms_of(b):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            res = fit_model(x, b) - y
        val = float(np.sqrt(np.mean(res ** 2)))
        return val if math.isfinite(val) else math.inf, res

    cost, res = rms_of(beta)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        J = _fit_jacobian(x, beta)
        A = J.T @ J
        g = J.T @ res
        improved = False
        while lam < 1e16:
            step = np.linalg.solve(A + lam * np.diag(np.diag(A)), -g)
            trial = beta + step
            new_cost, new_res = rms_of(trial)
            if new_cost < cost:
                improved = True
                break
            lam *= 10.0
        if not improved:
            # no descent direction left at any damping
            return FitParams(*map(float, beta), cost, it, True)
        rel_change = (cost - new_cost) / max(cost, 1e-300)
        beta, cost, res = trial, new_cost, new_res
        lam = max(lam / 10.0, 1e-12)
        if rel_change < tol or np.max(np.abs(step)) < tol * (1 + np.max(np.abs(beta))):
            return FitParams(*map(float, beta), cost, it, True)
    best = FitParams(*map(float, beta), cost, max_iter, False)
    raise FitError(f"fit did not converge in {max_iter} iterations (rms={cost:.3e})", best)
