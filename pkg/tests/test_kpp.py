import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invwave.analysis import fit_tail_rate
from invwave.errors import PreconditionError
from invwave.grid import Grid
from invwave.kpp import (KppProblem, kpp_rates, lower_problem, scale_lower_to_upper, shooting_profile,
                         solve_kpp, upper_problem)
from invwave.model import ModelParams

G = Grid(60.0, 2400)


@pytest.mark.parametrize("abar,b,c", [(0.8, 1.0, 2 * math.sqrt(0.8)), (0.8, 1.0, 2.0), (0.25, 1.0, 1.25)])
def test_residual_monotone_and_shooting(abar, b, c):
    pb = KppProblem(abar, b, c)
    w = solve_kpp(pb, G)
    assert w.residual_sup <= 1e-8
    assert np.all(np.diff(w.omega) >= 0)
    assert w.omega[G.center] == pytest.approx(0.5 * b)
    ref = shooting_profile(pb, G.xi)
    mid = np.abs(G.xi) <= 0.8 * G.L
    assert np.abs(ref[mid] - w.omega[mid]).max() <= 1e-4


def test_rates_closed_forms():
    r = kpp_rates(KppProblem(0.8, 1.0, 2.0))
    assert r.mu_minus == pytest.approx((2 - math.sqrt(0.8)) / 2)
    assert r.mu_plus == pytest.approx((2 - math.sqrt(7.2)) / 2)
    rc = kpp_rates(KppProblem(0.8, 1.0, 2 * math.sqrt(0.8)))
    assert rc.critical and rc.prefactor_linear
    assert rc.mu_minus == pytest.approx(math.sqrt(0.8))
    assert rc.mu_plus == pytest.approx(math.sqrt(0.8) - math.sqrt(1.6))


def test_fitted_tails_match():
    pb = KppProblem(0.25, 1.0, 1.25)
    w = solve_kpp(pb, G)
    r = kpp_rates(pb)
    fm = fit_tail_rate(G.xi, w.omega, "minus", 0.0, (1e-6, 1e-3), theoretical=r.mu_minus)
    fp = fit_tail_rate(G.xi, w.omega, "plus", 1.0, (1e-4, 1e-2), theoretical=-r.mu_plus)
    assert fm.rel_error <= 0.05 and fp.rel_error <= 0.05


def test_rejects_subcritical_and_short_grid():
    with pytest.raises(PreconditionError):
        KppProblem(0.8, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        solve_kpp(KppProblem(0.8, 1.0, 2.0), Grid(5.0, 200))
    with pytest.raises(PreconditionError):
        solve_kpp(KppProblem(0.8, 1.0, 2.0), G, pin_level=0.99)


def test_scaling_maps_lower_onto_upper():
    p = ModelParams(0.2, 1.0, l=0.08)
    breve = solve_kpp(lower_problem(p, 2.0), G)
    up = scale_lower_to_upper(breve, p)
    assert up.omega.max() == pytest.approx(1.0, abs=1e-6)
    assert up.residual_sup <= 1e-8
    tilde = solve_kpp(upper_problem(p, 2.0), G, pin_level=up.pin_level)
    assert np.abs(tilde.omega - up.omega).max() <= 1e-8


@settings(max_examples=12, deadline=None)
@given(st.floats(0.1, 0.95), st.floats(1.0, 1.6), st.floats(0.3, 1.0))
def test_random_problems_solve(abar, factor, b):
    pb = KppProblem(abar, b, 2 * math.sqrt(abar) * factor)
    w = solve_kpp(pb, Grid(60.0, 2400))
    assert w.residual_sup <= 1e-8
    assert np.all(np.diff(w.omega) >= 0)
    assert 0.0 <= w.omega.min() and w.omega.max() <= b


def test_pin_level_only_translates():
    from scipy.optimize import brentq
    pb = KppProblem(0.8, 1.0, 2.0)
    w1 = solve_kpp(pb, G)
    w2 = solve_kpp(pb, G, pin_level=0.3)
    s = brentq(lambda x: w1(np.array([x]))[0] - 0.3, -10, 10)
    mid = np.abs(G.xi) <= 0.8 * G.L
    assert np.abs(w1(G.xi[mid] + s) - w2.omega[mid]).max() <= 10 * G.h ** 2


def test_critical_tail_has_linear_prefactor():
    pb = KppProblem(0.25, 1.0, 1.0)
    w = solve_kpp(pb, Grid(100.0, 4000))
    fit = fit_tail_rate(w.xi, w.omega, "minus", 0.0, (1e-6, 1e-3), critical=True, theoretical=0.5)
    assert fit.rel_error <= 0.10
    inner = (w.omega > 1e-8) & (w.omega < 1 - 1e-8)
    assert np.all(np.diff(w.omega)[inner[:-1]] > 0)
