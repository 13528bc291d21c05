import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfdkit.spring import (ALPHA_X, ForcingTerm, SpringModel, basis_layout, canonical_phase,
                           fit_spring, fit_weights, forcing_value, integrate, rollout, step_count)
from lfdkit.synth import minimum_jerk


def euler_loop(tau, alpha, y0, g, f, dt):
    """Direct transcription of the Euler update, one step at a time."""
    beta = alpha / 4
    y, z = [y0], [0.0]
    for k in range(len(f) - 1):
        zd = (alpha * (beta * (g - y[-1]) - z[-1]) + f[k]) / tau
        yd = z[-1] / tau
        y.append(y[-1] + dt * yd)
        z.append(z[-1] + dt * zd)
    return np.array(y), np.array(z)


def analytic(t, tau, alpha, y0, g):
    k = alpha / (2 * tau)
    return g + (y0 - g) * (1 + k * t) * np.exp(-k * t)


def free_spring(tau, alpha, y0, g, n_basis=5):
    c, h = basis_layout(n_basis)
    return SpringModel(tau, alpha, alpha / 4, g, y0, ForcingTerm(c, h, np.zeros(n_basis)))


def test_phase_values():
    assert canonical_phase(0.0, 2.0) == 1.0
    assert canonical_phase(2.0, 2.0) == pytest.approx(0.01, rel=1e-14)
    assert canonical_phase(1.0, 2.0) == pytest.approx(0.1, rel=1e-14)


def test_basis_layout():
    c, h = basis_layout(4)
    np.testing.assert_allclose(c, np.exp(-ALPHA_X * np.array([0, 1 / 3, 2 / 3, 1])), rtol=1e-15)
    assert np.all(np.diff(c) < 0)
    assert h[-1] == h[-2] and h[0] == 1 / (c[1] - c[0]) ** 2


def test_forcing_value_identities():
    c, h = basis_layout(6)
    x = np.linspace(0.01, 1, 40)
    assert np.all(forcing_value(ForcingTerm(c, h, np.zeros(6)), x, 10.0, 0.0) == 0)
    ft = ForcingTerm(c, h, np.full(6, 2.5))
    assert np.all(forcing_value(ft, x, 3.0, 3.0) == 0)
    np.testing.assert_allclose(forcing_value(ft, x, 10.0, 4.0), 2.5 * 6.0 * x, rtol=1e-14)


def test_forcing_underflow_guard():
    c, h = basis_layout(2)
    ft = ForcingTerm(c, h * 1e6, np.ones(2))
    assert forcing_value(ft, 0.5, 1.0, 0.0) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_integrate_matches_euler_loop(seed):
    rng = np.random.default_rng(seed)
    tau, alpha = rng.uniform(0.5, 5), rng.uniform(1, 60)
    dt = tau / rng.integers(20, 400)
    steps = step_count(tau, dt)
    f = rng.normal(0, 50, steps)
    y0, g = rng.uniform(-90, 90, 2)
    y, z = integrate(tau, alpha, y0, g, f[:, None], dt)
    y_ref, z_ref = euler_loop(tau, alpha, y0, g, f, dt)
    scale = max(1.0, np.abs(y_ref).max())
    np.testing.assert_allclose(y[:, 0], y_ref, rtol=0, atol=1e-10 * scale)
    np.testing.assert_allclose(z[:, 0], z_ref, rtol=0, atol=1e-9 * max(1.0, np.abs(z_ref).max()))


def test_equilibrium():
    r = rollout(free_spring(1.0, 25.0, 5.0, 5.0), 5.0, 5.0, 1e-3)
    assert np.all(r.y == 5.0) and np.all(r.z == 0.0)


def test_step_count():
    assert step_count(1.0, 1e-3) == 1001
    assert step_count(1.0, 0.3) == 5
    r = rollout(free_spring(1.0, 25.0, 0.0, 10.0), 0.0, 10.0, 1e-3)
    assert len(r) == 1001


def test_zero_forcing_reach():
    r = rollout(free_spring(1.0, 25.0, 0.0, 10.0), 0.0, 10.0, 1e-3)
    assert np.all(np.diff(r.y) >= 0)
    assert r.y.max() - 10.0 <= 1e-3
    assert abs(r.y[-1] - 10.0) < 0.1
    # fine-step solution of the same ODE
    fine = analytic(r.t, 1.0, 25.0, 0.0, 10.0)
    assert np.abs(r.y - fine).max() < 0.05


def test_euler_converges_first_order():
    tau, alpha = 1.0, 25.0
    exact = analytic(tau, tau, alpha, 0.0, 10.0)
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        y, _ = integrate(tau, alpha, 0.0, 10.0, np.zeros((step_count(tau, dt), 1)), dt)
        errs.append(abs(y[-1, 0] - exact))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(1.8 < r < 2.2 for r in ratios)


def test_translation_invariance():
    t = np.linspace(0, 2, 201)
    y = 10 + 40 * minimum_jerk(t / 2) + 8 * np.sin(np.pi * t / 2)
    s = fit_spring(y, t, 25.0, 20)
    a = rollout(s, 10.0, 50.0, 0.01)
    b = rollout(s, 10.0 + 33.0, 50.0 + 33.0, 0.01)
    np.testing.assert_allclose(b.y - 33.0, a.y, rtol=0, atol=1e-9)


def test_min_jerk_fit_tracks_curve():
    t = np.linspace(0, 3, 301)
    y = 20 + 60 * minimum_jerk(t / 3)
    s = fit_spring(y, t, 25.0, 30)
    r = rollout(s, y[0], y[-1], t[1] - t[0])
    assert np.sqrt(np.mean((r.y - y) ** 2)) < 0.5


def test_weights_stable_under_upsampling():
    t = np.linspace(0, 3, 301)
    t2 = np.linspace(0, 3, 601)
    curve = lambda tt: 20 + 60 * minimum_jerk(tt / 3) + 10 * np.sin(np.pi * tt / 3)
    w1 = fit_weights(curve(t), t, 25.0, 15).weights
    w2 = fit_weights(curve(t2), t2, 25.0, 15).weights
    assert np.abs(w1 - w2).max() <= 0.05 * np.abs(w1).max()


def test_degenerate_amplitude_disables_forcing():
    t = np.linspace(0, 1, 50)
    y = np.full(50, 12.0)
    s = fit_spring(y, t, 10.0, 8)
    assert not s.forcing_enabled
    assert np.all(s.forcing.weights == 0)
    r = rollout(s, 12.0, 12.0, 0.02)
    assert np.all(r.y == 12.0)


def test_model_invariants():
    c, h = basis_layout(3)
    ft = ForcingTerm(c, h, np.zeros(3))
    with pytest.raises(ValueError, match="beta_z"):
        SpringModel(1.0, 20.0, 6.0, 0.0, 1.0, ft)
    with pytest.raises(ValueError, match="tau"):
        SpringModel(0.0, 20.0, 5.0, 0.0, 1.0, ft)
    with pytest.raises(ValueError, match="decreasing"):
        ForcingTerm(c[::-1], h, np.zeros(3))


@settings(max_examples=30, deadline=None)
@given(st.floats(-180, 180), st.floats(-180, 180), st.floats(20, 60), st.floats(0.5, 5))
def test_goal_convergence(y0, g, alpha, tau):
    r = rollout(free_spring(tau, alpha, y0, g), y0, g, 1e-3 * tau)
    assert abs(r.y[-1] - g) <= 0.5
    if y0 != g:
        overshoot = np.max((r.y - g) * math.copysign(1.0, g - y0))
        assert overshoot <= 10 * 1e-3 * tau * np.abs(r.z).max() / tau + 1e-12
