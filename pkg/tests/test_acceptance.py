"""Acceptance criteria 1-11, one test each.

Every test prints a single ``criterion N PASS/FAIL`` line; the collected lines
are repeated in the "acceptance criteria" section of the pytest summary.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ivri.control import accessibility_path, control_for_accessibility, control_for_imitation
from ivri.dynamics import integrate_ode, simulate_sde_final
from ivri.hormander import D_general, delta, delta_along, delta_on_branch, find_delta_zeros
from ivri.inputs import ConstantInput, PulsingInput
from ivri.jet import jet_var
from ivri.neuron import (
    GATES,
    RATES,
    F_infty,
    dF_dv,
    equilibrium_state,
    equilibrium_v,
    gate_a,
    gate_infty,
    hh_model,
    rhs_deterministic,
)
from ivri.noise import ConstantSignal, NoiseSpec
from ivri.orbit import classify_equilibrium, find_stable_orbit, section_point, upcrossings
from ivri.positivity import default_probe_model, make_target, mc_hitting, ou_ball_probability, ou_marginal
from oracles import central_difference, mp_rate, quasi_random_voltages

EXPECTED_ZEROS = (-11.4796, 10.3444)
OU = NoiseSpec(tau=1.0, gamma=0.5)


def test_criterion_01_branch_zeros(criterion):
    with criterion(1, "two zeros of the branch determinant near -11.4796 and +10.3444") as info:
        tic = time.perf_counter()
        roots = find_delta_zeros(-15.0, 30.0)
        info["roots"] = "[" + ", ".join(f"{r:.6f}" for r in roots) + "]"
        assert time.perf_counter() - tic < 5.0
        assert len(roots) == 2, f"found {len(roots)} zero(s) {info['roots']}, expected 2"
        for r, ref in zip(roots, EXPECTED_ZEROS):
            assert abs(r - ref) <= 0.02, f"zero {r:.6f} not within 0.02 of {ref}"


def test_criterion_02_negative_interval(criterion):
    with criterion(2, "branch determinant < 0 where F_inf lies in (-6.10, 26.56)") as info:
        tic = time.perf_counter()
        lo, hi = -6.15 + 0.05, 26.61 - 0.05
        v_lo, v_hi = equilibrium_v(lo), equilibrium_v(hi)
        # open interval: drop the end points themselves
        v = np.linspace(v_lo, v_hi, 202)[1:-1]
        assert v.size == 200
        Fi = F_infty(v)
        assert np.all((Fi > lo) & (Fi < hi))
        d = delta_on_branch(v)
        info["v_range"] = f"({v_lo:.4f}, {v_hi:.4f})"
        info["max_delta"] = float(d.max())
        assert np.all(d < 0)
        assert time.perf_counter() - tic < 5.0


def test_criterion_03_equilibrium_input_anchors(criterion):
    with criterion(3, "F_inf anchors at v = 0, -10, 10") as info:
        tic = time.perf_counter()
        f0, fm, fp = (float(F_infty(v)) for v in (0.0, -10.0, 10.0))
        info.update({"F_inf(0)": f0, "F_inf(-10)": fm, "F_inf(10)": fp})
        assert abs(f0 + 0.0534) <= 1e-3
        assert abs(fm + 6.15) <= 0.02
        assert abs(fp - 26.61) <= 0.02
        assert time.perf_counter() - tic < 1.0


def test_criterion_04_orbit(criterion):
    with criterion(4, "c = 15: unstable equilibrium, period 12.56 +- 0.05 ms, loops superpose") as info:
        tic = time.perf_counter()
        rep = classify_equilibrium(15.0)
        res = find_stable_orbit(15.0, dt=0.01)
        runtime = time.perf_counter() - tic
        info.update({"max_re": rep.max_real, "period": res.period, "diagnostic": res.diagnostic})
        assert rep.unstable
        assert abs(res.period - 12.56) <= 0.05
        assert res.diagnostic <= 0.05
        assert runtime < 30.0


def _crossing_after(t_cross, t0):
    later = t_cross[t_cross > t0]
    assert later.size, "no crossing after the requested time"
    return later[0]


def test_criterion_05_delta_along_orbit(criterion):
    with criterion(5, "determinant along the c = 15 orbit: negative arc, sign changes, near-zero after the peak") as info:
        tic = time.perf_counter()
        res = find_stable_orbit(15.0)
        # two loops from the section point, so arcs that wrap past it are contiguous
        x0 = section_point(res)
        traj = integrate_ode(lambda t, x: rhs_deterministic(t, x, 15.0), x0, 0.0, 2.0 * res.period, 0.01)
        t, d = delta_along(traj)
        v = traj.states[:, 0]
        up_m2, _, _ = upcrossings(t, v, -2.0)
        up_p5, _, _ = upcrossings(t, v, 5.0)
        t_a = up_m2[0]  # v = -2 up-crossing in the first loop
        t_b = _crossing_after(up_p5, t_a)  # next v = +5 up-crossing
        t_a_next = t_a + res.period
        arc = (t >= t_a) & (t <= t_b)
        comp = (t > t_b) & (t < t_a_next)
        sgn = np.sign(d[comp])
        changes = int(np.count_nonzero(sgn[1:] != sgn[:-1]))
        loop = t <= res.period
        max_abs = float(np.max(np.abs(d[loop])))
        t_peak = t[loop][np.argmax(v[loop])]
        window = (t >= t_peak) & (t <= t_peak + 5.0)
        min_after_peak = float(np.min(np.abs(d[window])))
        runtime = time.perf_counter() - tic
        info.update(
            {
                "arc": f"[{t_a:.3f}, {t_b:.3f}]",
                "arc_max_delta": float(d[arc].max()),
                "arc_min_abs_delta": float(np.min(np.abs(d[arc]))),
                "sign_changes": changes,
                "min_abs_after_peak/max": min_after_peak / max_abs,
            }
        )
        assert np.all(d[arc] < 0)
        assert changes >= 2
        assert min_after_peak <= 0.1 * max_abs
        assert runtime < 10.0


def test_criterion_06_determinant_identity(criterion):
    with criterion(6, "D_general = dF/dv * Delta at 100 random points") as info:
        tic = time.perf_counter()
        rng = np.random.default_rng(2024)
        x = np.vstack([rng.uniform(-80, 120, 100), rng.uniform(0, 1, (3, 100)), rng.normal(size=100)])
        D = D_general(hh_model(), x).value
        ref = dF_dv(x[1], x[2], x[3]) * delta(x[0], x[1], x[2], x[3]).value
        rel = np.abs(D - ref) / np.abs(ref)
        info["max_rel_err"] = float(rel.max())
        assert np.all(rel <= 1e-9)
        assert time.perf_counter() - tic < 1.0


def test_criterion_07_rate_jets(criterion):
    with criterion(7, "rate jets of orders 1-4 vs central differences (step 1e-4, 50-digit)") as info:
        tic = time.perf_counter()
        worst = 0.0
        v = quasi_random_voltages(25)
        for g, pair in RATES.items():
            for kind, fn in zip(("alpha", "beta"), pair):
                ref_f = mp_rate(f"{kind}_{g}")
                jets = fn(jet_var(v, 4)).derivatives()
                for k in range(1, 5):
                    ref = np.array([float(central_difference(ref_f, float(vi), k, 1e-4)) for vi in v])
                    worst = max(worst, float(np.max(np.abs(jets[k] - ref) / np.abs(ref))))
        for g, v_sing in (("n", 10.0), ("m", 25.0)):
            c = RATES[g][0](jet_var(v_sing, 4)).coeffs
            assert np.all(np.isfinite(c))
            near = RATES[g][0](jet_var(v_sing + 1e-6, 4)).coeffs
            assert np.allclose(c, near, rtol=1e-5)
        runtime = time.perf_counter() - tic
        info.update({"max_rel_err": worst, "runtime": runtime})
        assert worst <= 1e-5
        assert runtime < 1.0


def test_criterion_08_gating_invariance(criterion):
    with criterion(8, "100 SDE paths x 1e4 steps at dt = 1e-3: no clamp events") as info:
        tic = time.perf_counter()
        target = make_target(c=15.0, t=10.0)
        model = default_probe_model(target)
        final, stats = simulate_sde_final(model, target.x, 0.0, 10.0, dt=1e-3, seed=8, n_paths=100)
        runtime = time.perf_counter() - tic
        info.update({"clamp_events": stats.clamp_events, "runtime": runtime})
        assert stats.clamp_events == 0
        assert np.all((final[1:4] >= 0) & (final[1:4] <= 1))
        assert runtime < 30.0


def _exact_imitation(current, x0, times):
    model = hh_model()

    def rhs(s, y):
        J = model.J(y)
        return [J[0] + current(s), *J[1:]]

    y = solve_ivp(rhs, (0.0, times[-1]), x0[:4], method="DOP853", t_eval=times, rtol=1e-13, atol=1e-13).y.T
    return np.column_stack([y, x0[4] + current.integral(times)])


def test_criterion_09_imitation(criterion):
    with criterion(9, "imitation control over 25 ms: sup-error <= 1e-4 at dt = 0.01, 4th-order decay") as info:
        tic = time.perf_counter()
        model = hh_model(noise=OU)
        x0 = np.r_[equilibrium_state(0.0), 0.0]
        for name, current in (("const", ConstantInput(15.0)), ("pulse", PulsingInput(15.0, 12.56))):
            cps = [control_for_imitation(model, current, x0, 25.0, dt) for dt in (0.01, 0.005)]
            # sup-error against the RK4 solution of the target equation on the same grid
            info[f"{name}_err"] = cps[0].sup_error
            assert cps[0].sup_error <= 1e-4
            # decay against the exact solution (the same-grid error is at round-off for constant input)
            exact = [np.max(np.abs(cp.generated.states - _exact_imitation(current, x0, cp.times))) for cp in cps]
            info[f"{name}_decay"] = exact[0] / exact[1]
            assert 12.0 < exact[0] / exact[1] < 22.0
        info["pulse_decay_same_grid"] = cps[0].sup_error / cps[1].sup_error
        assert 12.0 < info["pulse_decay_same_grid"] < 22.0
        assert time.perf_counter() - tic < 10.0


def test_criterion_10_accessibility(criterion):
    with criterion(10, "accessibility paths over t = 10: exponential gate bound, controlled reproduction <= 1e-4") as info:
        tic = time.perf_counter()
        model = hh_model(noise=OU)
        t = 10.0
        generic = np.array([-5.0, 0.6, 0.2, 0.3, 0.4])
        rest = np.r_[equilibrium_state(0.0), 0.0]
        cases = [(generic, -5.0), (generic, 2.0), (generic, 10.0), (rest, 5.0)]
        slack, errs = [], []
        for x, z1 in cases:
            Z = accessibility_path(model, x, z1, t, dt=0.01)
            at1, end = Z.at(1.0), Z.final()
            for i, g in enumerate(GATES, start=1):
                yinf = gate_infty(g, z1)
                bound = abs(at1[i] - yinf) * math.exp(-gate_a(g, z1) * (t - 1.0))
                slack.append(abs(end[i] - yinf) - bound)
                # 1e-10 absorbs the RK4 error of the gate path itself
                assert abs(end[i] - yinf) <= bound + 1e-10, (x[0], z1, g)
            errs.append(control_for_accessibility(model, Z).sup_error)
        info.update({"max(dist - bound)": float(max(slack)), "max_sup_error": float(max(errs))})
        assert max(errs) <= 1e-4
        assert time.perf_counter() - tic < 10.0


def test_criterion_11_positivity(criterion):
    with criterion(11, "hitting probabilities of the constant and one-period targets; OU marginal") as info:
        tic = time.perf_counter()
        eps, n = 0.15, 10_000
        const = make_target(c=2.0, t=5.0)
        assert delta(*const.x[:4]).value < 0
        p1 = mc_hitting(default_probe_model(const), const.x, const.x_prime, eps, const.horizon, n, seed=1)
        info["const_p"] = p1.estimate
        assert p1.estimate > 0 and p1.interval[0] > 0

        osc = make_target(pulse=(15.0, 12.56))
        p2 = mc_hitting(default_probe_model(osc), osc.x, osc.x_prime, eps, osc.horizon, n, seed=2)
        info["orbit_p"] = p2.estimate
        assert p2.estimate > 0 and p2.interval[0] > 0

        noise = NoiseSpec(tau=1.0, gamma=0.5, signal=ConstantSignal(1.0))
        start = np.r_[equilibrium_state(0.0), -0.5]
        t_marg = 2.0
        mean, _ = ou_marginal(noise, start[-1], t_marg)
        center = start.copy()
        center[-1] = mean + 0.1
        p3 = mc_hitting(hh_model(noise=noise), start, center, eps, t_marg, n, seed=3, coords=[4])
        exact = ou_ball_probability(noise, start[-1], t_marg, center[-1], eps)
        half = 0.5 * (p3.interval[1] - p3.interval[0])
        info.update({"xi_p": p3.estimate, "xi_exact": exact, "xi_dev/half": abs(p3.estimate - exact) / half})
        assert abs(p3.estimate - exact) <= 3 * half
        runtime = time.perf_counter() - tic
        info["runtime"] = runtime
        assert runtime < 120.0
