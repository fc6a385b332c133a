"""Coupled traveling wave by monotone iteration inside an ordered bracket.

Each sweep freezes v, solves the scalar u-problem on [-L, L]

    u'' - c u' + u (1 - lam - u + lam K v) = 0,
    u(-L) = g_left,   u'(L) = alpha (1 - u(L)),

and then refreshes v from the closed-form quadrature of u.  The u-problem
with v frozen is of KPP type, so its solution map is order preserving in v,
and v_from_u is order preserving in u.  Started from a sub-solution the
sweeps increase, started from a super-solution they decrease.

A penalized linear sweep (``scheme="penalized"``) is kept as an option.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConstructionFailure, PostconditionError, PreconditionError, SolverFailure
from .grid import Grid, d1, d1_4, d2, d2_4
from .kpp import lower_problem, solve_kpp, upper_problem
from .model import (ModelParams, decay_ordering_gate, is_critical, lambda_gate, min_speed,
                    require_wave_params)
from .sandwich import find_upper_shift, v_from_u


@dataclass
class IterationConfig:
    scheme: str = "newton"          # "newton" (frozen-v exact sweep) or "penalized"
    penalty: float | None = None    # only used by the penalized scheme
    tol: float = 1e-10
    max_iter: int = 400
    seed: str = "lower"             # lower | upper
    bracket: str = "sandwich"       # sandwich (gated) | trivial ((0,0) and (1,1/K))
    newton_tol: float = 1e-15

    def __post_init__(self):
        if self.scheme not in ("newton", "penalized"):
            raise PreconditionError(f"unknown scheme {self.scheme!r}")
        if self.seed not in ("lower", "upper"):
            raise PreconditionError(f"seed must be lower or upper, got {self.seed!r}")
        if self.bracket not in ("sandwich", "trivial"):
            raise PreconditionError(f"bracket must be sandwich or trivial, got {self.bracket!r}")
        if not self.tol > 0 or self.max_iter < 1:
            raise PreconditionError("tol must be > 0 and max_iter >= 1")
        if self.penalty is not None and not self.penalty > 0:
            raise PreconditionError("penalty must be > 0")


@dataclass
class IterationTrace:
    changes: list = field(default_factory=list)
    margins: list = field(default_factory=list)
    confinement: list = field(default_factory=list)
    inner_steps: list = field(default_factory=list)
    converged: bool = False
    steps: int = 0
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Bracket:
    """Ordered sub/super pair used to seed and confine the iteration."""
    grid: Grid
    c: float
    kind: str
    u_lower: np.ndarray
    v_lower: np.ndarray
    u_upper: np.ndarray
    v_upper: np.ndarray
    g_left: float
    alpha: float
    zeta_upper: float = 0.0
    zeta_lower: float = 0.0
    l_iter: float | None = None
    guess: np.ndarray | None = None


@dataclass
class WaveProfile:
    grid: Grid
    u: np.ndarray
    v: np.ndarray
    c: float
    residual_u: float
    residual_v: float
    pin: tuple
    seed: str = "lower"

    @property
    def xi(self) -> np.ndarray:
        return self.grid.xi

    def shifted(self, k: int) -> "WaveProfile":
        """Translate by k grid cells (u(xi + k h)); vacated nodes hold the end values."""
        u, v = _roll(self.u, k), _roll(self.v, k)
        return WaveProfile(self.grid, u, v, self.c, self.residual_u, self.residual_v,
                           (self.pin[0] - k, self.pin[1]), self.seed)


def _roll(a: np.ndarray, k: int) -> np.ndarray:
    out = np.empty_like(a)
    if k >= 0:
        out[: len(a) - k] = a[k:]
        out[len(a) - k:] = a[-1]
    else:
        out[-k:] = a[: len(a) + k]
        out[:-k] = a[0]
    return out


@dataclass
class DerivativeProfile:
    w1: np.ndarray
    w2: np.ndarray
    interior: np.ndarray
    min_w1: float
    min_w2: float
    degenerate: bool
    linearized_residual: float
    identity_gap: float

    @property
    def positive(self) -> bool:
        return self.degenerate or (self.min_w1 > 0 and self.min_w2 > 0)


def right_tail_rate(c: float, p: ModelParams) -> float:
    """Slowest decay rate of (1 - u) at +inf from the linearization at (1, 1/K)."""
    return min(p.lam * p.K / c, (math.sqrt(c * c + 4.0) - c) / 2.0)


def reaction_u(u, v, p: ModelParams):
    return u * (1.0 - p.lam - u + p.lam * p.K * v)


def _reaction_u_du(u, v, p: ModelParams):
    return 1.0 - p.lam - 2.0 * u + p.lam * p.K * v


def u_residual(u, v, grid: Grid, c: float, p: ModelParams, g_left: float, alpha: float) -> np.ndarray:
    """Discrete u-equation including the boundary rows (row 0 Dirichlet, row n Robin)."""
    n, h = grid.n, grid.h
    r = np.empty(n + 1)
    r[0] = u[0] - g_left
    r[1:n] = d2(u, h) - c * d1(u, h) + reaction_u(u[1:-1], v[1:-1], p)
    gap = 1.0 - u[n]
    r[n] = (2 * u[n - 1] - 2 * u[n] + 2 * h * alpha * gap) / (h * h) - c * alpha * gap + reaction_u(u[n], v[n], p)
    return r


def _banded(grid: Grid, c: float, alpha: float, diag_extra: np.ndarray) -> np.ndarray:
    n, h = grid.n, grid.h
    ab = np.zeros((3, n + 1))
    ab[1, 0] = 1.0
    ab[1, 1:n] = -2.0 / (h * h) + diag_extra[1:n]
    ab[0, 2:] = 1.0 / (h * h) - c / (2 * h)
    ab[2, : n - 1] = 1.0 / (h * h) + c / (2 * h)
    ab[2, n - 1] = 2.0 / (h * h)
    ab[1, n] = -2.0 / (h * h) - 2.0 * alpha / h + c * alpha + diag_extra[n]
    return ab


def scaled_residual(w, v, grid: Grid, c: float, p: ModelParams, g_left: float, alpha: float) -> np.ndarray:
    """u_residual divided row-wise by u, written in w = log u.

    Same discrete equations as u_residual, but the unknown is log u and only
    ratios of neighbouring values appear, so the far-left Dirichlet datum
    (~1e-40 on wide critical grids) no longer makes the Newton matrix
    numerically singular.
    """
    n, h = grid.n, grid.h
    r = np.empty(n + 1)
    growth = 1.0 - p.lam + p.lam * p.K * v
    r[0] = w[0] - math.log(g_left)
    ep = np.exp(w[2:] - w[1:-1])
    em = np.exp(w[:-2] - w[1:-1])
    r[1:n] = (ep - 2.0 + em) / (h * h) - c * (ep - em) / (2 * h) + growth[1:-1] - np.exp(w[1:-1])
    un = math.exp(w[n])
    em_n = math.exp(w[n - 1] - w[n])
    gap = 1.0 / un - 1.0
    r[n] = (2 * em_n - 2.0 + 2 * h * alpha * gap) / (h * h) - c * alpha * gap + growth[n] - un
    return r


def _scaled_jacobian(w, grid: Grid, c: float, alpha: float) -> np.ndarray:
    n, h = grid.n, grid.h
    ab = np.zeros((3, n + 1))
    ab[1, 0] = 1.0
    ep = np.exp(w[2:] - w[1:-1]) * (1.0 / (h * h) - c / (2 * h))
    em = np.exp(w[:-2] - w[1:-1]) * (1.0 / (h * h) + c / (2 * h))
    ab[0, 2:] = ep
    ab[2, : n - 1] = em
    ab[1, 1:n] = -ep - em - np.exp(w[1:-1])
    un = math.exp(w[n])
    em_n = 2.0 * math.exp(w[n - 1] - w[n]) / (h * h)
    ab[2, n - 1] = em_n
    ab[1, n] = -em_n - (2 * alpha / h - c * alpha) / un - un
    return ab


def _solve_u_frozen(u0, v, grid, c, p, g_left, alpha, step_tol, max_newton=100):
    """Newton on scaled_residual; converged when the implied change in u is below step_tol."""
    w = np.log(u0)
    for k in range(1, max_newton + 1):
        r = scaled_residual(w, v, grid, c, p, g_left, alpha)
        dw = solve_banded((1, 1), _scaled_jacobian(w, grid, c, alpha), r)
        big = np.abs(dw).max()
        if not np.isfinite(big):
            raise SolverFailure("inner Newton produced non-finite values")
        w -= dw * min(1.0, 1.0 / big)      # cap steps at one e-fold
        if big <= 1.0 and np.max(np.abs(dw) * np.exp(w)) <= step_tol:
            return np.exp(w), k
    if big < 1e-8:
        # stalled at the round-off floor of the deep tail, where u itself is negligible
        return np.exp(w), k
    raise SolverFailure("inner Newton did not converge",
                        residual=float(np.abs(scaled_residual(w, v, grid, c, p, g_left, alpha)).max()))


def _penalized_sweep(u0, v0, grid, c, p, g_left, alpha, penalty):
    n = grid.n
    rhs = -(penalty * u0 + reaction_u(u0, v0, p))
    ab = _banded(grid, c, alpha, np.full(n + 1, -penalty))
    b = rhs.copy()
    b[0] = g_left
    b[n] = rhs[n] - (2 * grid.h * alpha / grid.h ** 2 - c * alpha)
    return solve_banded((1, 1), ab, b)


def iteration_bracket(p: ModelParams, c: float, grid: Grid, kind: str = "sandwich") -> Bracket:
    """Build the ordered pair that seeds the iteration.

    ``sandwich`` uses the upper KPP sub-wave and the lower KPP sub-wave with
    level parameter max(l, lam); each carries the v computed from its own
    (shifted) u so the v-relation holds with equality.  It requires both
    gates.  ``trivial`` uses (0, 0) below and (1, v_from_u(1)) above; it needs
    no gate but only the lower end is usable as a seed.
    """
    require_wave_params(p)
    cs = min_speed(p)
    if c < cs * (1 - 1e-12):
        raise PreconditionError(f"c = {c} is below the minimal speed {cs:.12g}; no monotone wave")
    alpha = right_tail_rate(c, p)
    tilde = solve_kpp(upper_problem(p, c), grid, tol=1e-12)
    g_left = float(tilde.omega[0])
    n1 = grid.n + 1
    if kind == "trivial":
        # u = 1 with its own quadrature v is a super-solution: F(1, v) = lam (K v - 1) <= 0
        ones = np.ones(n1)
        return Bracket(grid, c, kind, np.zeros(n1), np.zeros(n1), ones,
                       v_from_u(ones, c, p, grid).v, g_left, alpha, guess=tilde.omega)
    bound, ok = lambda_gate(p)
    if not ok:
        raise PreconditionError(f"lambda = {p.lam} exceeds the gate bound {bound:.10g}")
    if not decay_ordering_gate(c, p)[1]:
        raise PreconditionError(f"decay-ordering gate fails at c = {c}")
    zu, uu = find_upper_shift(tilde, p, c)
    vu = v_from_u(uu, c, p, grid).v
    l_iter = max(p.l, p.lam)
    pl = ModelParams(p.lam, p.K, p.nu, l_iter)
    breve = solve_kpp(lower_problem(pl, c), grid, tol=1e-12)
    h = grid.h
    for k in range(0, 2 * grid.n + 1):
        ul = breve.sample_shifted(-k * h)
        vl = v_from_u(ul, c, p, grid).v
        if ul[0] <= g_left and np.all(ul <= uu) and np.all(vl <= vu):
            break
    else:
        raise ConstructionFailure("could not order the lower seed below the upper seed")
    return Bracket(grid, c, kind, ul, vl, uu, vu, g_left, alpha, zu, k * h, l_iter, guess=tilde.omega)


def shift_bracket(br: Bracket, k: int) -> Bracket:
    """The same bracket translated by k >= 0 grid cells toward -inf (profiles read at xi + k h)."""
    if k < 0 or br.guess is None:
        raise PreconditionError("shift_bracket needs k >= 0 and the upper generator")
    return replace(br, u_lower=_roll(br.u_lower, k), v_lower=_roll(br.v_lower, k),
                   u_upper=_roll(br.u_upper, k), v_upper=_roll(br.v_upper, k),
                   g_left=float(br.guess[k]), guess=_roll(br.guess, k))


def bracket_defects(br: Bracket, p: ModelParams) -> dict:
    """Signed worst violations of the discrete sub/super inequalities (<= 0 means fine)."""
    ru_up = u_residual(br.u_upper, br.v_upper, br.grid, br.c, p, br.g_left, br.alpha)
    ru_lo = u_residual(br.u_lower, br.v_lower, br.grid, br.c, p, br.g_left, br.alpha)
    return {
        "upper": float(max(ru_up[1:].max(), -ru_up[0])),
        "lower": float(max(-ru_lo[1:].min(), ru_lo[0])),
    }


def _scaled_change(u1, v1, u0, v0, K):
    return float(max(np.abs(u1 - u0).max(), K * np.abs(v1 - v0).max()))


def recomputed_residuals(u, v, grid: Grid, c: float, p: ModelParams) -> tuple[float, float]:
    """Sup-norm residuals of the wave system with fourth-order stencils.

    The iterate satisfies its own second-order discrete equations to round-off,
    so the residual is re-evaluated with an independent, more accurate stencil;
    what remains is the O(h^2) discretization error of the computed profile.
    """
    h = grid.h
    ui, vi = u[2:-2], v[2:-2]
    ru = d2_4(u, h) - c * d1_4(u, h) + reaction_u(ui, vi, p)
    rv = -c * d1_4(v, h) + p.lam * ui * (1.0 - p.K * vi)
    return float(np.abs(ru).max()), float(np.abs(rv).max())


def _profile(u, v, grid, c, p, br, seed) -> WaveProfile:
    ru, rv = recomputed_residuals(u, v, grid, c, p)
    return WaveProfile(grid, u, v, c, ru, rv, (0, br.g_left), seed)


def iterate_once(current: WaveProfile, cfg: IterationConfig, p: ModelParams,
                 bracket: Bracket | None = None) -> WaveProfile:
    br = bracket or iteration_bracket(p, current.c, current.grid, cfg.bracket)
    u0, v0 = current.u, current.v
    if cfg.scheme == "newton":
        guess = u0 if u0.min() > 0 or br.guess is None else br.guess
        u, _ = _solve_u_frozen(guess, v0, current.grid, current.c, p, br.g_left, br.alpha, cfg.newton_tol)
    else:
        pen = cfg.penalty if cfg.penalty is not None else default_penalty(br, p)
        if pen < 2 * br.u_upper.max() + p.lam - 1e-12:
            raise PreconditionError(f"penalty {pen} is below the quasi-monotonicity bound")
        u = _penalized_sweep(u0, v0, current.grid, current.c, p, br.g_left, br.alpha, pen)
    v = v_from_u(np.maximum(u, 0.0), current.c, p, current.grid).v
    return _profile(u, v, current.grid, current.c, p, br, current.seed)


def default_penalty(br: Bracket, p: ModelParams) -> float:
    return 2.0 * float(br.u_upper.max()) + p.lam + 1.0


def default_grid(p: ModelParams, c: float) -> Grid:
    if is_critical(c, 1.0 - p.lam):
        return Grid(100.0, 4000)
    return Grid(60.0, 2400)


def solve_wave(p: ModelParams, c: float, grid: Grid | None = None,
               cfg: IterationConfig | None = None,
               bracket: Bracket | None = None) -> tuple[WaveProfile, IterationTrace]:
    cfg = cfg or IterationConfig()
    grid = grid or default_grid(p, c)
    t0 = time.perf_counter()
    br = bracket or iteration_bracket(p, c, grid, cfg.bracket)
    defects = bracket_defects(br, p)
    slack = 1e-9
    if defects["upper"] > slack or defects["lower"] > slack:
        raise ConstructionFailure(f"bracket is not a discrete sub/super pair: {defects}")
    if cfg.seed == "upper" and br.kind == "trivial":
        raise PreconditionError("the gate-free bracket can only be seeded from below: with v frozen "
                                "near 1/K the u-problem is oscillatory for c < 2")
    if cfg.seed == "lower":
        u, v, sign = br.u_lower.copy(), br.v_lower.copy(), 1.0
    else:
        u, v, sign = br.u_upper.copy(), br.v_upper.copy(), -1.0
    current = WaveProfile(grid, u, v, c, math.nan, math.nan, (0, br.g_left), cfg.seed)
    trace = IterationTrace()
    for _ in range(cfg.max_iter):
        nxt = iterate_once(current, cfg, p, br)
        change = _scaled_change(nxt.u, nxt.v, current.u, current.v, p.K)
        margin = float(min((sign * (nxt.u - current.u)).min(), p.K * (sign * (nxt.v - current.v)).min()))
        conf = float(min((nxt.u - br.u_lower).min(), (br.u_upper - nxt.u).min(),
                         p.K * (nxt.v - br.v_lower).min(), p.K * (br.v_upper - nxt.v).min()))
        trace.changes.append(change)
        trace.margins.append(margin)
        trace.confinement.append(conf)
        trace.steps += 1
        if conf < -1e-9 or margin < -1e-9:
            trace.seconds = time.perf_counter() - t0
            raise SolverFailure(f"iterate left the order interval or lost monotonicity "
                                f"(confinement {conf:.3e}, margin {margin:.3e})", trace=trace)
        current = nxt
        if change <= cfg.tol:
            trace.converged = True
            break
    trace.seconds = time.perf_counter() - t0
    if not trace.converged:
        raise SolverFailure(f"no convergence in {cfg.max_iter} sweeps (last change {trace.changes[-1]:.3e})",
                            residual=current.residual_u, trace=trace)
    h = grid.h
    bound = 100.0 * h * h * max(1.0, float(np.abs(current.u).max()))
    if current.residual_u > bound or current.residual_v > bound:
        raise PostconditionError(f"recomputed residuals {current.residual_u:.3e}, {current.residual_v:.3e} "
                                 f"exceed 100 h^2 = {bound:.3e}")
    return current, trace


def bilateral_solve(p: ModelParams, c: float, grid: Grid | None = None,
                    cfg: IterationConfig | None = None):
    from .analysis import translation_align
    cfg = cfg or IterationConfig()
    grid = grid or default_grid(p, c)
    br = iteration_bracket(p, c, grid, cfg.bracket)
    lo_cfg = IterationConfig(**{**asdict(cfg), "seed": "lower"})
    up_cfg = IterationConfig(**{**asdict(cfg), "seed": "upper"})
    below, tb = solve_wave(p, c, grid, lo_cfg, br)
    above, ta = solve_wave(p, c, grid, up_cfg, br)
    rep = translation_align(below, above)
    return below, above, rep.sup_gap, (tb, ta, rep)


def derivative_check(w: WaveProfile, p: ModelParams, band: float = 1e-5) -> DerivativeProfile:
    h, c = w.grid.h, w.c
    w1 = np.gradient(w.u, h, edge_order=2)
    w2 = np.gradient(w.v, h, edge_order=2)
    interior = np.flatnonzero((w.u > band) & (w.u < 1.0 - band))
    degenerate = interior.size == 0
    min_w1 = float(w1[interior].min()) if not degenerate else math.inf
    min_w2 = float(w2[interior].min()) if not degenerate else math.inf
    # differentiated system: w1'' - c w1' + F_u w1 + lam K u w2 = 0,  -c w2' + lam(1-Kv) w1 - lam K u w2 = 0
    ui, vi = w.u[1:-1], w.v[1:-1]
    r1 = d2(w1, h) - c * d1(w1, h) + _reaction_u_du(ui, vi, p) * w1[1:-1] + p.lam * p.K * ui * w2[1:-1]
    r2 = -c * d1(w2, h) + p.lam * (1 - p.K * vi) * w1[1:-1] - p.lam * p.K * ui * w2[1:-1]
    lin = float(max(np.abs(r1[2:-2]).max(), np.abs(r2[2:-2]).max())) if r1.size > 4 else 0.0
    ident = float(np.abs(w2 - (p.lam / c) * w.u * (1 - p.K * w.v))[1:-1].max())
    return DerivativeProfile(w1, w2, interior, min_w1, min_w2, degenerate, lin, ident)
