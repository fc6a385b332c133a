"""Post-processing: tail-rate fits, translation alignment, monotonicity audits,
and the oscillation witness below the minimal speed."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import PreconditionError
from .model import ModelParams, OriginClassification, classify_origin, is_critical, min_speed
from .sandwich import v_from_u


@dataclass
class RateReport:
    side: str
    fitted_rate: float
    theoretical_rate: float
    rel_error: float
    window: tuple
    amplitude: float
    nodes: int
    critical_mode: bool = False
    component: str = ""
    tolerance: float = 0.05

    @property
    def passed(self) -> bool:
        return self.rel_error <= self.tolerance

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class AlignmentReport:
    theta: float
    sup_gap: float
    cells: float


def fit_tail_rate(xi, profile, side: str, limit_value: float = 0.0, window=(1e-6, 1e-3),
                  critical: bool = False, theoretical: float = math.nan,
                  exclude_end: float = 0.0) -> RateReport:
    """Least-squares decay rate of |profile - limit_value| on a value window.

    The rate is reported as a positive number for both tails.  In critical
    mode the log of |profile - limit| / |xi| is fitted instead.
    """
    if side not in ("minus", "plus"):
        raise PreconditionError("side must be minus or plus")
    xi = np.asarray(xi, dtype=float)
    dev = np.abs(np.asarray(profile, dtype=float) - limit_value)
    lo, hi = window
    mask = (dev > lo) & (dev < hi)
    if side == "minus":
        mask &= xi < 0
        if exclude_end:
            mask &= xi > xi[0] + exclude_end
    else:
        mask &= xi > 0
        if exclude_end:
            mask &= xi < xi[-1] - exclude_end
    k = int(mask.sum())
    if k < 12:
        resolved = (float(dev.min()), float(dev.max()))
        raise PreconditionError(f"only {k} nodes in window {window} on the {side} side; "
                                f"resolved deviation range is {resolved}")
    x = xi[mask]
    y = np.log(dev[mask])
    if critical:
        y = y - np.log(np.abs(x))
    slope, intercept = np.polyfit(x, y, 1)
    rate = slope if side == "minus" else -slope
    rel = abs(rate - theoretical) / abs(theoretical) if np.isfinite(theoretical) and theoretical else math.nan
    return RateReport(side, float(rate), float(theoretical), float(rel), tuple(window),
                      float(math.exp(intercept)), k, critical)


def theoretical_rates(p: ModelParams, c: float) -> dict:
    abar = 1.0 - p.lam
    crit = is_critical(c, abar)
    minus = math.sqrt(abar) if crit else (c - math.sqrt(c * c - 4 * abar)) / 2
    plus_v = p.lam * p.K / c
    # u sees both decaying modes of the linearization at (1, 1/K); the slower one wins
    plus_u = min(plus_v, (math.sqrt(c * c + 4.0) - c) / 2)
    return {"minus": minus, "plus_u": plus_u, "plus_v": plus_v, "critical": crit}


def check_wave_rates(w, p: ModelParams, minus_window=(1e-6, 1e-3),
                     plus_window=(1e-5, 1e-2), exclude_end: float = 2.0) -> list[RateReport]:
    th = theoretical_rates(p, w.c)
    crit = th["critical"]
    tol = 0.10 if crit else 0.05
    reps = []
    for comp, arr, lim, plus in (("u", w.u, 1.0, th["plus_u"]), ("v", w.v, 1.0 / p.K, th["plus_v"])):
        scale = 1.0 if comp == "u" else 1.0 / p.K
        r = fit_tail_rate(w.xi, arr / scale, "minus", 0.0, minus_window, crit, th["minus"], exclude_end)
        r.component, r.tolerance = comp, tol
        reps.append(r)
        r = fit_tail_rate(w.xi, arr / scale, "plus", lim / scale, plus_window, False, plus, exclude_end)
        r.component, r.tolerance = comp, tol
        reps.append(r)
    return reps


def minus_rates_agree(reports: list[RateReport], tol: float = 0.02) -> tuple[float, bool]:
    a = [r.fitted_rate for r in reports if r.side == "minus"]
    rel = abs(a[0] - a[1]) / max(abs(a[0]), abs(a[1]))
    return rel, rel <= tol


def _interp(xi, y):
    f = PchipInterpolator(xi, y, extrapolate=False)
    return f


def _sup_gap(theta, xi, u1, v1, u2, v2, fu1=None, fv1=None, both=True) -> float:
    fu1 = fu1 or _interp(xi, u1)
    x = xi[(xi + theta >= xi[0]) & (xi + theta <= xi[-1])]
    if x.size < 2:
        return math.inf
    sel = np.searchsorted(xi, x)
    g = np.abs(fu1(x + theta) - u2[sel]).max()
    if both:
        fv1 = fv1 or _interp(xi, v1)
        g = max(g, np.abs(fv1(x + theta) - v2[sel]).max())
    return float(g)


def translation_align(w1, w2, max_cells: int | None = None) -> AlignmentReport:
    """Shift theta minimizing sup |w1(xi + theta) - w2(xi)| over the common support."""
    if abs(w1.grid.h - w2.grid.h) > 1e-12 * w1.grid.h:
        raise PreconditionError("profiles must share the grid spacing")
    xi, h = w1.xi, w1.grid.h
    if w2.u.max() < w1.u.min() or w1.u.max() < w2.u.min():
        raise PreconditionError("profiles have disjoint value ranges")
    # coarse: match the level-1/2 crossings, then scan integer shifts near it
    def crossing(u):
        i = int(np.argmax(u >= 0.5 * (u.min() + u.max())))
        return xi[i]
    k0 = int(round((crossing(w1.u) - crossing(w2.u)) / h))
    span = max_cells if max_cells is not None else 3
    fu1 = _interp(xi, w1.u)
    fv1 = _interp(xi, w1.v)
    best = min(range(k0 - span, k0 + span + 1),
               key=lambda k: _sup_gap(k * h, xi, w1.u, w1.v, w2.u, w2.v, fu1, both=False))
    res = minimize_scalar(lambda t: _sup_gap(t, xi, w1.u, w1.v, w2.u, w2.v, fu1, both=False),
                          bounds=((best - 1) * h, (best + 1) * h), method="bounded",
                          options={"xatol": 1e-9 * h})
    theta = float(res.x)
    if _sup_gap(best * h, xi, w1.u, w1.v, w2.u, w2.v, fu1, both=False) <= res.fun:
        theta = best * h
    gap = _sup_gap(theta, xi, w1.u, w1.v, w2.u, w2.v, fu1, fv1, both=True)
    return AlignmentReport(theta, gap, theta / h)


@dataclass
class MonotonicityReport:
    strict: bool
    min_du: float
    min_dv: float
    flat_nodes: list = field(default_factory=list)
    identity_gap: float = math.nan
    identity_ok: bool = True


def strict_monotonicity_audit(w, p: ModelParams | None = None, band: float = 1e-5,
                              identity_tol: float = 1e-8) -> MonotonicityReport:
    """Strict increase of u and v where u lies in (band, 1 - band), and (if p is given)
    the closed-form relation between v and the running integral of u."""
    u, v = np.asarray(w.u), np.asarray(w.v)
    inner = (u[:-1] > band) & (u[:-1] < 1 - band) & (u[1:] > band) & (u[1:] < 1 - band)
    du, dv = np.diff(u), np.diff(v)
    bad = np.flatnonzero(inner & ((du <= 0) | (dv <= 0)))
    min_du = float(du[inner].min()) if inner.any() else math.inf
    min_dv = float(dv[inner].min()) if inner.any() else math.inf
    rep = MonotonicityReport(bad.size == 0, min_du, min_dv, bad.tolist())
    if p is not None and getattr(w, "c", None):
        vv = v_from_u(u, w.c, p, w.grid).v
        rep.identity_gap = float(np.abs(vv - v).max())
        rep.identity_ok = rep.identity_gap <= identity_tol
    return rep


@dataclass
class SubcriticalReport:
    classification: OriginClassification
    sign_change_at: float | None
    quasi_period: float
    within_period: bool


def subcritical_diagnostic(p: ModelParams, c: float, grid=None, seed: float = 1e-8) -> SubcriticalReport:
    """Integrate u'' - c u' + (1 - lam) u = 0 from a small positive seed and report
    the first sign change of u."""
    cs = min_speed(p)
    if not 0 < c < cs:
        raise PreconditionError(f"c must lie in (0, {cs:.12g})")
    cls = classify_origin(c, p)
    omega = abs(cls.roots[0].imag)
    period = 2 * math.pi / omega
    span = 2.0 * period if grid is None else max(2.0 * period, 2.0 * grid.L)

    def rhs(_, y):
        return [y[1], c * y[1] - (1.0 - p.lam) * y[0]]

    def sign(_, y):
        return y[0]
    sign.terminal, sign.direction = True, -1
    sol = solve_ivp(rhs, (0.0, span), [seed, seed * c / 2], events=sign, rtol=1e-10, atol=1e-14 * seed)
    hit = float(sol.t_events[0][0]) if sol.t_events[0].size else None
    return SubcriticalReport(cls, hit, period, hit is not None and hit <= period)
