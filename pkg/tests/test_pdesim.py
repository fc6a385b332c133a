import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invwave.errors import PreconditionError, StabilityError
from invwave.model import ModelParams, min_speed
from invwave.pdesim import FrontTrace, SimConfig, SimState, estimate_speed, front_position, initial_state, run, step

P = ModelParams(0.2, 1.0)
CFG = SimConfig(x_max=100.0, dx=0.1, dt=0.002, t_end=1.0)


def test_zero_state_is_fixed():
    x = CFG.x
    s = SimState(0.0, np.zeros_like(x), np.linspace(0, 1, x.size))
    n = step(s, CFG, P)
    assert np.array_equal(n.u, s.u) and np.array_equal(n.v, s.v)


def test_equilibrium_is_fixed():
    x = CFG.x
    s = SimState(0.0, np.ones_like(x), np.full(x.size, 1.0 / P.K))
    n = step(s, CFG, P)
    assert np.abs(n.u - 1).max() <= 1e-14 and np.abs(n.v - 1).max() <= 1e-14


def test_mass_grows_after_one_step():
    s = initial_state(CFG, P)
    n = step(s, CFG, P)
    assert n.u.sum() > s.u.sum()


def test_invariants_over_short_run():
    s = initial_state(CFG, P)
    for _ in range(500):
        s = step(s, CFG, P)
        assert s.u.min() >= -1e-8 and s.u.max() <= 1 + 1e-8
        assert s.v.min() >= 0 and s.v.max() <= 1.0 / P.K


def test_stability_gates():
    with pytest.raises(StabilityError):
        SimConfig(dt=1.0)
    with pytest.raises(StabilityError):
        SimConfig(dt=0.01, diffusion="explicit")


def test_front_position_examples():
    dx = 0.1
    x = np.arange(0, 40 + dx / 2, dx)
    step_u = np.where(x <= 10, 1.0, 0.0)
    assert abs(front_position(step_u, 0.5, x) - 10) <= dx
    logistic = 1 / (1 + np.exp(x - 20))
    assert abs(front_position(logistic, 0.5, x) - 20) <= dx / 2
    assert front_position(np.full_like(x, 0.2), 0.5, x) is None


def _trace(pos, t=None):
    t = np.arange(len(pos), dtype=float) if t is None else t
    return FrontTrace(t, np.asarray(pos, dtype=float))


def test_estimate_speed_linear():
    t = np.linspace(0, 50, 101)
    assert estimate_speed(_trace(1.8 * t + 3, t)) == pytest.approx(1.8, abs=1e-12)


def test_estimate_speed_noise():
    dx = 0.1
    t = np.linspace(0, 100, 201)
    noise = np.random.default_rng(0).uniform(-dx / 2, dx / 2, t.size)
    tr = _trace(1.8 * t + noise, t)
    c = estimate_speed(tr)
    assert abs(c - 1.8) <= dx / (tr.fit_window[1] - tr.fit_window[0])


def test_estimate_speed_constant_and_short():
    assert estimate_speed(_trace(np.full(40, 7.0))) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(PreconditionError):
        estimate_speed(_trace(np.arange(12.0)))


def test_zero_ic_flagged():
    tr, _ = run(SimConfig(x_max=50.0, t_end=1.0, amplitude=0.0), P)
    assert tr.flag == "no-front" and tr.times.size == 0


def test_short_run_moves_right():
    tr, snaps = run(SimConfig(x_max=200.0, t_end=40.0), P)
    assert tr.flag == "" and tr.c_emp > 0
    assert np.all(np.diff(tr.positions[len(tr.positions) // 2:]) >= 0)
    assert abs(tr.c_emp - min_speed(P)) / min_speed(P) <= 0.1


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 0.95), st.floats(0.1, 4.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_step_keeps_invariant_region(lam, K, amp, vfrac):
    p = ModelParams(lam, K)
    cfg = SimConfig(x_max=20.0, dx=0.1, dt=0.01)
    x = cfg.x
    u = amp * np.exp(-((x - 10) / 3) ** 2)
    s = SimState(0.0, u, np.full(x.size, vfrac / K))
    for _ in range(20):
        s = step(s, cfg, p)
    assert s.u.min() >= -1e-8 and s.u.max() <= 1 + 1e-8
    assert s.v.min() >= 0 and s.v.max() <= 1.0 / K
