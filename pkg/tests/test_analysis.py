import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invwave.analysis import (check_wave_rates, fit_tail_rate, minus_rates_agree, strict_monotonicity_audit,
                              subcritical_diagnostic, theoretical_rates, translation_align)
from invwave.errors import PreconditionError
from invwave.model import ModelParams, classify_origin, min_speed
from invwave.wave import WaveProfile

XI = np.linspace(-200.0, 200.0, 8001)


def test_fit_pure_exponential_minus():
    r = fit_tail_rate(XI, np.exp(0.25 * XI), "minus", 0.0, (1e-6, 1e-3), theoretical=0.25)
    assert abs(r.fitted_rate - 0.25) <= 1e-6 and r.passed


def test_fit_pure_exponential_plus():
    r = fit_tail_rate(XI, 1.0 - 0.3 * np.exp(-0.1 * XI), "plus", 1.0, (1e-6, 1e-3), theoretical=0.1)
    assert abs(r.fitted_rate - 0.1) <= 1e-6
    assert r.amplitude == pytest.approx(0.3, rel=1e-6)


def test_critical_mode_flag():
    prof = np.abs(XI) * np.exp(0.5 * XI)
    crit = fit_tail_rate(XI, prof, "minus", 0.0, (1e-8, 1e-3), critical=True)
    plain = fit_tail_rate(XI, prof, "minus", 0.0, (1e-8, 1e-3), critical=False)
    assert abs(crit.fitted_rate - 0.5) <= 1e-3
    # log|xi| adds slope 1/xi < 0 on the left tail, so the plain fit reads shallower
    assert plain.fitted_rate < 0.5 - 1e-2


def test_fit_window_too_small():
    with pytest.raises(PreconditionError, match="resolved deviation range"):
        fit_tail_rate(XI, np.exp(0.25 * XI), "minus", 0.0, (1e-3, 1.001e-3))


def test_wave_rates(wave_c2, base_params):
    w, _ = wave_c2
    reps = check_wave_rates(w, base_params)
    assert len(reps) == 4 and all(r.passed for r in reps)
    by = {(r.component, r.side): r for r in reps}
    assert by["u", "plus"].theoretical_rate == pytest.approx(0.1)
    assert by["u", "minus"].theoretical_rate == pytest.approx((2 - math.sqrt(0.8)) / 2)
    assert minus_rates_agree(reps)[1]


def test_theoretical_rates_critical():
    p = ModelParams(0.75, 1.0)
    th = theoretical_rates(p, 1.0)
    assert th["critical"] and th["plus_v"] == pytest.approx(0.75) and th["minus"] == pytest.approx(0.5)
    assert th["plus_u"] == pytest.approx((math.sqrt(5) - 1) / 2)


def test_align_identity_and_three_cells(wave_c2):
    w, _ = wave_c2
    r0 = translation_align(w, w)
    assert r0.theta == 0.0 and r0.sup_gap == 0.0
    r3 = translation_align(w, w.shifted(3))
    assert r3.theta == pytest.approx(3 * w.grid.h, abs=1e-12)
    assert r3.sup_gap <= 1e-10


def _fractional_shift(w, s):
    from scipy.interpolate import PchipInterpolator
    x = np.clip(w.xi + s, w.xi[0], w.xi[-1])
    return WaveProfile(w.grid, PchipInterpolator(w.xi, w.u)(x), PchipInterpolator(w.xi, w.v)(x),
                       w.c, 0.0, 0.0, (0, 0.0))


@settings(max_examples=20, deadline=None)
@given(st.floats(-10.0, 10.0))
def test_align_recovers_any_shift(wave_c2, cells):
    w, _ = wave_c2
    h = w.grid.h
    r = translation_align(w, _fractional_shift(w, cells * h))
    assert abs(r.theta - cells * h) <= h / 2


def test_align_rejects_disjoint(wave_c2):
    w, _ = wave_c2
    far = WaveProfile(w.grid, w.u + 5.0, w.v, w.c, 0, 0, (0, 0))
    with pytest.raises(PreconditionError):
        translation_align(w, far)


def test_audit_on_wave(wave_c2, base_params):
    w, _ = wave_c2
    rep = strict_monotonicity_audit(w, base_params)
    assert rep.strict and rep.min_du > 0 and rep.min_dv > 0
    assert rep.identity_ok and rep.identity_gap <= 1e-8


def test_audit_on_upper_pair(base_params):
    from invwave.grid import Grid
    from invwave.wave import iteration_bracket
    g = Grid(60.0, 2400)
    br = iteration_bracket(base_params, 2.0, g)
    up = WaveProfile(g, br.u_upper, br.v_upper, 2.0, 0, 0, (0, 0))
    assert strict_monotonicity_audit(up).strict


def test_audit_flags_flat_segment(wave_c2):
    w, _ = wave_c2
    u = w.u.copy()
    i = int(np.argmax(u > 0.5))
    u[i + 1:i + 4] = u[i]
    rep = strict_monotonicity_audit(WaveProfile(w.grid, u, w.v, w.c, 0, 0, (0, 0)))
    assert not rep.strict
    assert set(rep.flat_nodes) == {i, i + 1, i + 2}


def test_subcritical_examples():
    p = ModelParams(0.75, 1.0)
    rep = subcritical_diagnostic(p, 0.8)
    assert rep.classification.oscillatory
    assert rep.classification.roots[0] == pytest.approx(complex(0.4, -0.3))
    assert rep.quasi_period == pytest.approx(2 * math.pi / 0.3)
    assert rep.sign_change_at is not None and rep.within_period
    cls = classify_origin(1.0, ModelParams(0.2, 1.0))
    assert cls.discriminant == pytest.approx(1 - 3.2) and cls.oscillatory


def test_subcritical_rejects_critical():
    p = ModelParams(0.2, 1.0)
    with pytest.raises(PreconditionError):
        subcritical_diagnostic(p, min_speed(p))


@pytest.mark.parametrize("lam", np.linspace(0.05, 0.9, 5))
@pytest.mark.parametrize("frac", np.linspace(0.1, 0.95, 5))
def test_subcritical_grid(lam, frac):
    p = ModelParams(float(lam), 1.0)
    rep = subcritical_diagnostic(p, float(frac) * min_speed(p))
    assert rep.classification.oscillatory and rep.sign_change_at is not None
