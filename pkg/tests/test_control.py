import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from ivri.control import (
    accessibility_path,
    control_for_accessibility,
    control_for_imitation,
    deterministic_path,
    integrate_controlled,
    smooth_bridge,
)
from ivri.dynamics import integrate_ode
from ivri.errors import DomainError
from ivri.inputs import ConstantInput, PulsingInput
from ivri.neuron import GATES, F, IvriModel, equilibrium_state, gate_a, gate_infty, hh_model
from ivri.noise import ConstantSignal, NoiseSpec, SinusoidalSignal

OU = NoiseSpec(tau=1.0, gamma=0.5, signal=ConstantSignal(0.0))
CIR = NoiseSpec("cir", 1.0, 0.6, SinusoidalSignal(0.3, 0.2, 10.0), K=1.5)


# --- bridge ----------------------------------------------------------------------


def test_bridge_constant_when_ends_agree():
    g, dg = smooth_bridge(2.5, 2.5)
    s = np.linspace(0, 3, 50)
    assert np.all(g(s) == 2.5) and np.all(dg(s) == 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_bridge_interpolation_conditions(x1, z1):
    g, dg = smooth_bridge(x1, z1)
    assert g(0.0) == x1 and g(1.0) == pytest.approx(z1, abs=1e-12)
    assert dg(0.0) == 0.0 and dg(1.0) == 0.0
    assert g(7.0) == g(1.0) and dg(7.0) == 0.0


def test_bridge_monotone_and_second_derivative_vanishes_at_ends():
    g, dg = smooth_bridge(-1.0, 3.0)
    s = np.linspace(0, 1, 1001)
    assert np.all(dg(s) >= 0) and np.all(np.diff(g(s)) >= 0)
    h = 1e-6
    assert abs((dg(h) - dg(0.0)) / h) < 1e-3
    assert abs((dg(1.0) - dg(1.0 - h)) / h) < 1e-3


def test_bridge_derivative_matches_difference():
    g, dg = smooth_bridge(0.3, -4.0)
    s, h = np.linspace(0.05, 0.95, 19), 1e-6
    assert np.allclose((g(s + h) - g(s - h)) / (2 * h), dg(s), rtol=1e-7)


# --- accessibility -----------------------------------------------------------------


def test_accessibility_from_fixed_point_stays_put():
    z1 = 4.0
    x = np.r_[z1, [gate_infty(g, z1) for g in GATES], 0.7]
    Z = accessibility_path(hh_model(noise=OU), x, z1, 10.0)
    assert np.max(np.abs(Z.final()[1:4] - x[1:4])) <= 1e-9


def test_accessibility_gates_relax_exponentially():
    z1 = 6.0
    x = np.r_[-5.0, 0.6, 0.2, 0.3, 0.0]
    Z = accessibility_path(hh_model(noise=OU), x, z1, 10.0)
    at1 = Z.at(1.0)
    for i, g in enumerate(GATES, start=1):
        yinf = gate_infty(g, z1)
        bound = abs(at1[i] - yinf) * math.exp(-gate_a(g, z1) * 9.0)
        assert abs(Z.final()[i] - yinf) <= bound * (1 + 1e-6) + 1e-12


def test_accessibility_input_coordinate_identity():
    x = np.r_[1.0, 0.4, 0.1, 0.5, 0.2]
    Z = accessibility_path(hh_model(noise=OU), x, 8.0, 3.0, dt=0.005)
    Fz = F(Z.states[:, 0], Z.states[:, 1], Z.states[:, 2], Z.states[:, 3])
    intF = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(Z.times) * (Fz[1:] + Fz[:-1]))])
    lhs = Z.states[:, -1] - Z.states[0, -1]
    rhs = Z.states[:, 0] - Z.states[0, 0] - intF
    assert np.max(np.abs(lhs - rhs)) < 1e-3


def test_accessibility_control_reproduces_path():
    x = np.r_[0.0, 0.3, 0.05, 0.6, 0.0]
    model = hh_model(noise=OU)
    errs = [control_for_accessibility(model, accessibility_path(model, x, 10.0, 5.0, dt=dt)) for dt in (0.02, 0.01)]
    assert errs[1].sup_error < 1e-4
    assert errs[0].sup_error / errs[1].sup_error > 8.0
    assert np.all(np.isfinite(errs[1].hdot_samples))


def test_open_loop_tracking_is_sensitive_when_held_above_threshold():
    # resting gates with the voltage pinned at 10 mV start a spike: the controlled
    # flow amplifies a 1e-8 offset by orders of magnitude, so its reproduction
    # error at dt = 0.01 is far larger than for a hold at a stable level
    model = hh_model(noise=OU)
    rest = np.r_[equilibrium_state(0.0), 0.0]
    hot = control_for_accessibility(model, accessibility_path(model, rest, 10.0, 10.0))
    calm = control_for_accessibility(model, accessibility_path(model, rest, 2.0, 10.0))
    assert calm.sup_error < 1e-6 < 1e-3 < hot.sup_error
    shifted = integrate_controlled(model, rest + [1e-8, 0, 0, 0, 0], hot.hdot, 10.0)
    assert np.max(np.abs(shifted.final() - hot.generated.final())) > 1e-4


def test_accessibility_rejects_bounded_input_and_short_horizon():
    x = np.r_[0.0, 0.3, 0.05, 0.6, 0.0]
    with pytest.raises(DomainError):
        accessibility_path(hh_model(noise=CIR), x, 1.0, 5.0)
    with pytest.raises(DomainError):
        accessibility_path(hh_model(noise=OU), x, 1.0, 1.0)


# --- imitation ---------------------------------------------------------------------


def test_ou_hdot_closed_form_without_current():
    model = hh_model(noise=NoiseSpec(tau=2.0, gamma=0.7, signal=ConstantSignal(0.0)))
    x0 = np.r_[equilibrium_state(1.0), 0.9]
    cp = control_for_imitation(model, ConstantInput(0.0), x0, 2.0)
    assert np.allclose(cp.hdot_samples, 2.0 * 0.9 / (0.7 * math.sqrt(2.0)), rtol=1e-14)


def _bare_model():
    base = hh_model()
    return IvriModel(
        m=5,
        F=base.F,
        a=base.a,
        b=base.b,
        b_m=lambda t, x: 0.0 * x,
        sigma=lambda x: 1.0 + 0.0 * np.asarray(x),
        sigma_prime=lambda x: 0.0 * np.asarray(x),
    )


def test_hdot_vanishes_without_current_or_input_drift():
    cp = control_for_imitation(_bare_model(), ConstantInput(0.0), np.r_[equilibrium_state(0.0), 3.0], 1.0)
    assert np.all(cp.hdot_samples == 0.0)


def test_imitation_rejects_input_leaving_U():
    x0 = np.r_[equilibrium_state(0.0), 0.0]
    with pytest.raises(DomainError):
        control_for_imitation(hh_model(noise=CIR), ConstantInput(-1.0), x0, 2.0)


def test_imitation_rejects_vanishing_diffusion():
    x0 = np.r_[equilibrium_state(0.0), 0.0]
    with pytest.raises(DomainError):
        control_for_imitation(hh_model(noise=NoiseSpec(gamma=0.0)), ConstantInput(1.0), x0, 2.0)


def _target_oracle(current, x0, t_eval):
    # the deterministic model driven by the current, solved by an adaptive 8th-order method
    def rhs(s, y):
        model = hh_model()
        J = model.J(y)
        return [J[0] + current(s), *J[1:]]

    sol = solve_ivp(rhs, (0.0, t_eval[-1]), x0[:4], method="DOP853", t_eval=t_eval, rtol=1e-12, atol=1e-12)
    return sol.y.T


@pytest.mark.parametrize("noise", [OU, CIR], ids=["ou", "cir"])
def test_imitation_matches_independent_solver(noise):
    current = PulsingInput(3.0, 8.0)
    x0 = np.r_[equilibrium_state(0.5), 0.4]
    cp = control_for_imitation(hh_model(noise=noise), current, x0, 8.0, dt=0.005)
    ref = _target_oracle(current, x0, cp.times)
    assert np.max(np.abs(cp.generated.states[:, :4] - ref) * [0.01, 1, 1, 1]) < 1e-7
    assert np.allclose(cp.generated.states[:, -1], 0.4 + current.integral(cp.times), atol=1e-8)


def test_imitation_converges_at_fourth_order():
    current = PulsingInput(15.0, 12.56)
    x0 = np.r_[equilibrium_state(2.0), 0.0]
    model = hh_model(noise=OU)
    e = [control_for_imitation(model, current, x0, 20.0, dt=dt).sup_error for dt in (0.02, 0.01)]
    assert 10.0 < e[0] / e[1] < 22.0


def test_deterministic_path_accepts_plain_callables():
    x0 = np.r_[equilibrium_state(1.0), 0.0]
    a = deterministic_path(hh_model(), x0, ConstantInput(2.0), 2.0)
    b = deterministic_path(hh_model(), x0, lambda s: 2.0, 2.0)
    assert np.allclose(a.states, b.states, rtol=1e-10, atol=1e-12)


# --- controlled flow -------------------------------------------------------------


def test_zero_control_gives_stratonovich_flow():
    model = hh_model(noise=CIR)
    x0 = np.r_[equilibrium_state(0.5), 0.5]
    gen = integrate_controlled(model, x0, lambda s: 0.0, 2.0)
    ref = integrate_ode(model.strat_drift, x0, 0.0, 2.0, 0.01)
    assert np.array_equal(gen.states, ref.states)
    d, st_ = model.drift(0.0, x0), model.strat_drift(0.0, x0)
    corr = 0.5 * model.sigma(0.5) * model.sigma_prime(0.5)
    assert st_[-1] == pytest.approx(d[-1] - corr) and st_[0] == pytest.approx(d[0] - corr)
    assert np.array_equal(st_[1:4], d[1:4])


def test_stratonovich_correction_vanishes_for_ou():
    model = hh_model(noise=OU)
    x = np.r_[equilibrium_state(2.0), 1.3]
    assert np.array_equal(model.strat_drift(0.3, x), model.drift(0.3, x))


def test_first_coordinate_identity_along_controlled_path():
    model = hh_model(noise=CIR)
    x0 = np.r_[equilibrium_state(0.5), 0.5]
    gen = integrate_controlled(model, x0, lambda s: math.sin(3 * s), 3.0, dt=0.002)
    x = gen.states
    Fx = F(x[:, 0], x[:, 1], x[:, 2], x[:, 3])
    intF = np.cumsum(0.5 * np.diff(gen.times) * (Fx[1:] + Fx[:-1]))
    assert np.allclose((x[1:, 0] - x[0, 0]) - (x[1:, -1] - x[0, -1]), intF, atol=1e-4)
