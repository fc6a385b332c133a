"""Scalar logistic KPP fronts  w'' - c w' + abar w (1 - w/b) = 0,  w(-inf)=0, w(+inf)=b.

Both sub-waves of the sandwich construction are members of this family:
the upper generator has b = 1, the lower one b = (1-lam)/(1-lam+l); in both
cases abar = 1 - lam.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.sparse.linalg import spsolve

from .errors import PostconditionError, PreconditionError, SolverFailure
from .grid import Grid, d1, d2
from .model import ModelParams, is_critical, require_wave_params


@dataclass(frozen=True)
class KppProblem:
    abar: float
    b: float
    c: float
    b1: float | None = None

    def __post_init__(self):
        if self.b1 is None:
            object.__setattr__(self, "b1", self.abar)
        if not self.abar > 0:
            raise PreconditionError("abar must be > 0")
        if not 0 < self.b <= 1:
            raise PreconditionError("b must lie in (0, 1]")
        if not self.b1 > 0:
            raise PreconditionError("b1 must be > 0")
        if self.c < 2.0 * math.sqrt(self.abar) * (1 - 1e-12):
            raise PreconditionError(
                f"c = {self.c} is below the KPP minimal speed {2 * math.sqrt(self.abar)}")

    @property
    def critical(self) -> bool:
        return is_critical(self.c, self.abar)

    def f(self, w):
        return self.abar * w * (1.0 - w / self.b)

    def fprime(self, w):
        return self.abar * (1.0 - 2.0 * w / self.b)


def upper_problem(p: ModelParams, c: float) -> KppProblem:
    require_wave_params(p)
    return KppProblem(abar=1.0 - p.lam, b=1.0, c=c)


def lower_problem(p: ModelParams, c: float) -> KppProblem:
    require_wave_params(p)
    a = 1.0 - p.lam
    return KppProblem(abar=a, b=a / (a + p.l), c=c)


@dataclass(frozen=True)
class KppRates:
    mu_minus: float
    mu_plus: float
    critical: bool
    prefactor_linear: bool
    amp_minus: float | None = None
    amp_plus: float | None = None


def kpp_rates(problem: KppProblem) -> KppRates:
    a, c, b1 = problem.abar, problem.c, problem.b1
    if problem.critical:
        ra = math.sqrt(a)
        return KppRates(mu_minus=ra, mu_plus=ra - math.sqrt(a + b1), critical=True,
                        prefactor_linear=True)
    return KppRates(mu_minus=(c - math.sqrt(c * c - 4 * a)) / 2,
                    mu_plus=(c - math.sqrt(c * c + 4 * b1)) / 2,
                    critical=False, prefactor_linear=False)


@dataclass(frozen=True)
class KppWave:
    problem: KppProblem
    grid: Grid
    omega: np.ndarray
    pin_level: float
    pin_index: int
    residual_sup: float

    @property
    def xi(self) -> np.ndarray:
        return self.grid.xi

    def __call__(self, x) -> np.ndarray:
        """Evaluate the front at arbitrary points.

        Monotone (PCHIP) interpolation inside the grid, exponential tail
        extrapolation outside it.
        """
        x = np.asarray(x, dtype=float)
        xi, w, b = self.grid.xi, self.omega, self.problem.b
        out = np.empty_like(x)
        inside = (x >= xi[0]) & (x <= xi[-1])
        out[inside] = PchipInterpolator(xi, w)(x[inside])
        left = x < xi[0]
        if left.any():
            slope = math.log(w[1] / w[0]) / self.grid.h if w[0] > 0 and w[1] > 0 else kpp_rates(self.problem).mu_minus
            out[left] = w[0] * np.exp(slope * (x[left] - xi[0]))
        right = x > xi[-1]
        if right.any():
            mu = kpp_rates(self.problem).mu_plus
            out[right] = b - (b - w[-1]) * np.exp(mu * (x[right] - xi[-1]))
        return out

    def sample_shifted(self, zeta: float) -> np.ndarray:
        """omega(xi + zeta) on the own grid nodes."""
        k = zeta / self.grid.h
        if abs(k - round(k)) < 1e-9 and abs(k) <= self.grid.n:
            k = int(round(k))
            n = self.grid.n
            out = np.empty(n + 1)
            if k >= 0:
                out[: n + 1 - k] = self.omega[k:]
                if k:
                    out[n + 1 - k:] = self(self.grid.xi[n + 1 - k:] + zeta)
            else:
                out[-k:] = self.omega[: n + 1 + k]
                out[:-k] = self(self.grid.xi[:-k] + zeta)
            return out
        return self(self.grid.xi + zeta)


def _residual_vector(w, pb: KppProblem, grid: Grid, pin_index: int, pin_level: float, kappa_r: float):
    h, c, b = grid.h, pb.c, pb.b
    n = grid.n
    r = np.empty(n + 1)
    r[: n - 1] = d2(w, h) - c * d1(w, h) + pb.f(w[1:-1])
    # Robin closure at +L from the +inf tail: w' = kappa_r (b - w), ghost-point elimination
    g = b - w[n]
    r[n - 1] = (2 * w[n - 1] - 2 * w[n] + 2 * h * kappa_r * g) / (h * h) - c * kappa_r * g + pb.f(w[n])
    r[n] = w[pin_index] - pin_level
    return r


def _jacobian(w, pb: KppProblem, grid: Grid, pin_index: int, kappa_r: float):
    h, c = grid.h, pb.c
    n = grid.n
    lo = 1.0 / (h * h) + c / (2 * h)
    hi = 1.0 / (h * h) - c / (2 * h)
    rows, cols, vals = [], [], []
    i = np.arange(1, n)
    r = i - 1
    rows += [r, r, r]
    cols += [i - 1, i, i + 1]
    vals += [np.full(n - 1, lo), -2.0 / (h * h) + pb.fprime(w[1:-1]), np.full(n - 1, hi)]
    rows += [np.array([n - 1, n - 1])]
    cols += [np.array([n - 1, n])]
    vals += [np.array([2.0 / (h * h),
                       -2.0 / (h * h) - 2 * kappa_r / h + c * kappa_r + pb.fprime(w[n])])]
    rows += [np.array([n])]
    cols += [np.array([pin_index])]
    vals += [np.array([1.0])]
    return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n + 1, n + 1))


def solve_kpp(problem: KppProblem, grid: Grid, pin_level: float | None = None,
              tol: float = 1e-10, max_iter: int = 50, max_halvings: int = 30,
              check_tail: bool = True) -> KppWave:
    """Monotone KPP front on ``grid`` with omega(0) = pin_level.

    Central differences, damped Newton.  The left end is left free (the
    discrete recurrence is stable when marched toward -inf), the right end
    carries the linearized tail closure, and the node at xi = 0 is pinned
    to remove translation invariance.
    """
    b = problem.b
    if pin_level is None:
        pin_level = 0.5 * b
    if not 0.05 * b < pin_level < 0.95 * b:
        raise PreconditionError("pin_level must lie in (0.05 b, 0.95 b)")
    rates = kpp_rates(problem)
    if check_tail and rates.mu_minus * grid.L < 8:
        raise PreconditionError(
            f"grid too short: mu_minus * L = {rates.mu_minus * grid.L:.2f} < 8")
    kappa_r = -rates.mu_plus
    k = grid.center
    xi = grid.xi
    shift = math.log(b / pin_level - 1.0) / rates.mu_minus
    w = b / (1.0 + np.exp(-rates.mu_minus * (xi - shift)))
    w[k] = pin_level

    res = _residual_vector(w, problem, grid, k, pin_level, kappa_r)
    norm = np.max(np.abs(res))
    for _ in range(max_iter):
        if norm <= tol:
            break
        J = _jacobian(w, problem, grid, k, kappa_r)
        dw = spsolve(J, -res)
        step = 1.0
        for _ in range(max_halvings):
            trial = w + step * dw
            r_trial = _residual_vector(trial, problem, grid, k, pin_level, kappa_r)
            n_trial = np.max(np.abs(r_trial))
            if n_trial < norm:
                break
            step *= 0.5
        else:
            raise SolverFailure("KPP line search failed", residual=norm)
        w, res, norm = trial, r_trial, n_trial
    if norm > tol:
        raise SolverFailure(f"KPP Newton did not converge (residual {norm:.3e})", residual=norm)

    if np.any(np.diff(w) < -1e-12 * b) or w.min() < -1e-14 * b or w.max() > b * (1 + 1e-12):
        raise PostconditionError("converged KPP profile is not monotone in [0, b]")
    w = np.clip(w, 0.0, b)
    wave = KppWave(problem, grid, w, float(pin_level), k, 0.0)
    return replace(wave, residual_sup=kpp_residual(wave))


def kpp_residual(wave: KppWave) -> float:
    """sup over interior nodes of |D2 w - c D1 w + f(w)|."""
    if wave.grid.n < 4:
        raise PreconditionError("need n >= 4")
    pb, h, w = wave.problem, wave.grid.h, wave.omega
    return float(np.max(np.abs(d2(w, h) - pb.c * d1(w, h) + pb.f(w[1:-1]))))


def scale_lower_to_upper(breve: KppWave, p: ModelParams) -> KppWave:
    """Map the lower sub-wave onto the upper one by the factor (1-lam+l)/(1-lam)."""
    lo = lower_problem(p, breve.problem.c)
    pb = breve.problem
    if not (math.isclose(pb.abar, lo.abar, rel_tol=1e-12) and math.isclose(pb.b, lo.b, rel_tol=1e-12)):
        raise PreconditionError("breve does not solve the lower KPP problem for these parameters")
    if not breve.omega.max() > 0 or np.any(np.diff(breve.omega) < -1e-12):
        raise PreconditionError("breve is not a monotone front")
    factor = (1.0 - p.lam + p.l) / (1.0 - p.lam)
    up = upper_problem(p, pb.c)
    wave = KppWave(up, breve.grid, breve.omega * factor, breve.pin_level * factor,
                   breve.pin_index, 0.0)
    return replace(wave, residual_sup=kpp_residual(wave))


def shooting_profile(problem: KppProblem, xi, pin_level: float | None = None,
                     delta: float = 1e-9, floor: float = 1e-13) -> np.ndarray:
    """Independent reference front by phase-plane shooting.

    Integrates w' = q, q' = c q - f(w) backward in xi from the saddle (b, 0)
    along its stable eigendirection, places the pin crossing at xi = 0 and
    evaluates on ``xi``.  Values beyond the integrated range use the
    linearized tails.
    """
    b, c = problem.b, problem.c
    if pin_level is None:
        pin_level = 0.5 * b
    mu_p = kpp_rates(problem).mu_plus
    y0 = [b - delta * b, -mu_p * delta * b]

    def rhs(_, y):
        return [y[1], c * y[1] - problem.f(y[0])]

    def hit_floor(_, y):
        return y[0] - floor * b
    hit_floor.terminal = True

    def hit_pin(_, y):
        return y[0] - pin_level

    sol = solve_ivp(rhs, (0.0, -1e4), y0, method="DOP853", rtol=1e-12, atol=1e-16,
                    dense_output=True, events=(hit_floor, hit_pin))
    xi_pin = sol.t_events[1][0]
    t_end = sol.t[-1]
    x = np.asarray(xi, dtype=float) + xi_pin
    out = np.empty_like(x)
    mid = (x <= 0.0) & (x >= t_end)
    out[mid] = sol.sol(x[mid])[0]
    right = x > 0.0
    out[right] = b - delta * b * np.exp(mu_p * x[right])
    left = x < t_end
    if left.any():
        w_end, q_end = sol.y[0, -1], sol.y[1, -1]
        out[left] = w_end * np.exp((q_end / w_end) * (x[left] - t_end))
    return out
