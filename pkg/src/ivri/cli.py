"""
Command-line front end: ``ivri <subcommand> [options]``.

Settings are resolved as flags > ``--config`` JSON > built-in defaults.
Each subcommand writes its tables into ``--out`` and prints a one-line
summary.  Exit status is 0 on success, 2 for inputs outside a domain and
3 for numerical failures.
"""

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import control, dynamics, hormander, orbit, positivity
from .errors import DomainError, NumericError
from .inputs import ConstantInput, PulsingInput
from .io import RunConfig, config_hash, write_csv, write_trajectory_binary, write_trajectory_csv
from .neuron import GATES, equilibrium_state, gate_infty, hh_model, rhs_deterministic
from .noise import NoiseSpec, TrackingSignal

EXIT_DOMAIN = 2
EXIT_NUMERIC = 3


def _common(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="64-bit seed of the noise streams")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker cap (computations are vectorized, single process)")


def _noise_flags(p):
    p.add_argument("--noise-kind", choices=["ou", "cir"])
    p.add_argument("--tau", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--K", type=float, help="CIR shift")


def build_parser():
    ap = argparse.ArgumentParser(prog="ivri", description=__doc__.strip().splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equilibrium", help="equilibrium and its stability under constant input")
    p.add_argument("--c", type=float, required=True)
    _common(p)

    p = sub.add_parser("delta-scan", help="3x3 determinant along the equilibrium branch")
    p.add_argument("--lo", type=float, default=-15.0)
    p.add_argument("--hi", type=float, default=30.0)
    p.add_argument("--step", type=float, default=1e-2)
    _common(p)

    for name, hlp in (("orbit", "stable orbit under constant input"), ("delta-orbit", "determinant along the stable orbit")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--c", type=float, default=15.0)
        p.add_argument("--dt", type=float)
        p.add_argument("--t-transient", type=float)
        p.add_argument("--points", type=int, default=256, help="equidistant samples per orbit")
        _common(p)

    p = sub.add_parser("simulate-ode", help="RK4 path of the deterministic model")
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=50.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--dv", type=float, default=1.0, help="voltage offset from the equilibrium (mV)")
    _common(p)

    p = sub.add_parser("simulate-sde", help="Euler-Maruyama path of the stochastic model")
    p.add_argument("--c", type=float, default=0.0, help="deterministic current carried by the input")
    p.add_argument("--t1", type=float, default=50.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--dv", type=float, default=1.0)
    p.add_argument("--xi0", type=float, default=0.0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="also write trajectory.bin")
    _noise_flags(p)
    _common(p)

    p = sub.add_parser("control-verify", help="controlled flow versus its target path")
    p.add_argument("--kind", choices=["imitation", "accessibility"], default="imitation")
    p.add_argument("--c", type=float, default=15.0, help="constant current (imitation)")
    p.add_argument("--a", type=float, help="pulsing amplitude; with --T selects a(1+sin(2 pi t/T))")
    p.add_argument("--T", type=float)
    p.add_argument("--z1", type=float, default=5.0, help="final voltage (accessibility)")
    p.add_argument("--t", type=float, default=25.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--xi0", type=float, default=0.0)
    _noise_flags(p)
    _common(p)

    p = sub.add_parser("positivity", help="Monte Carlo hitting probability of a target ball")
    p.add_argument("--target", choices=["equilibrium", "orbit"], default="equilibrium")
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--a", type=float, default=15.0)
    p.add_argument("--T", type=float, default=12.56)
    p.add_argument("--t", type=float, default=5.0, help="horizon for the equilibrium target")
    p.add_argument("--zeta", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=0.15)
    p.add_argument("--n-paths", type=int, default=10_000)
    p.add_argument("--dt", type=float)
    p.add_argument("--dump-states", action="store_true")
    _noise_flags(p)
    _common(p)

    p = sub.add_parser("lie-check", help="numeric [A_1, A_0] versus its closed form")
    p.add_argument("--c", type=float, default=15.0)
    p.add_argument("--xi", type=float, default=0.0)
    p.add_argument("--fd-step", type=float)
    _noise_flags(p)
    _common(p)
    return ap


def resolve_config(args):
    """Merge defaults, the optional config file and explicit flags."""
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.threads is not None:
        if args.threads < 1:
            raise DomainError("--threads must be >= 1")
        cfg.threads = args.threads
    over = {}
    for flag, key in (("noise_kind", "kind"), ("tau", "tau"), ("gamma", "gamma"), ("K", "K")):
        val = getattr(args, flag, None)
        if val is not None:
            over[key] = val
    if over:
        d = cfg.noise.to_dict()
        d.update(over)
        cfg.noise = NoiseSpec.from_dict(d)
    # step sizes are read per subcommand (ODE or SDE); only the transient is shared
    if getattr(args, "t_transient", None) is not None:
        cfg.integrator = replace(cfg.integrator, t_transient=args.t_transient)
    return cfg


def _run_hash(cfg, args):
    # where results go and how many workers run do not change them
    skip = ("config", "out", "threads")
    flags = {k: v for k, v in vars(args).items() if k not in skip}
    conf = {k: v for k, v in cfg.to_dict().items() if k not in skip}
    return config_hash({"config": conf, "flags": flags})


def _ode_dt(cfg, args):
    return args.dt if getattr(args, "dt", None) is not None else cfg.integrator.dt_ode


def _sde_dt(cfg, args):
    return args.dt if getattr(args, "dt", None) is not None else cfg.integrator.dt_sde


def _tracking_noise(cfg, current, zeta):
    n = cfg.noise
    return NoiseSpec(n.kind, n.tau, n.gamma, TrackingSignal(current, zeta, n.tau), n.K)


# -- subcommands --------------------------------------------------------------

def cmd_equilibrium(args, cfg, out, h):
    rep = orbit.classify_equilibrium(args.c, cfg.model)
    x = rep.equilibrium
    write_csv(
        out / "equilibrium.csv",
        ["c", "v", "n", "m", "h", "max_real_eig", "unstable"],
        [[args.c, *x, rep.max_real, float(rep.unstable)]],
        h,
    )
    state = "unstable" if rep.unstable else "stable"
    return f"c={args.c:.17g} v_c={x[0]:.17g} max_re={rep.max_real:.6g} {state}"


def cmd_delta_scan(args, cfg, out, h):
    n = max(int(np.ceil((args.hi - args.lo) / args.step)), 1)
    v = np.linspace(args.lo, args.hi, n + 1)
    d = hormander.delta_on_branch(v)
    inf = [gate_infty(g, v) for g in GATES]
    write_csv(out / "delta_scan.csv", ["v", "delta", "n_inf", "m_inf", "h_inf"], np.column_stack([v, d, *inf]), h)
    roots = hormander.find_delta_zeros(args.lo, args.hi, args.step)
    write_csv(out / "delta_zeros.csv", ["v"], np.array(roots).reshape(-1, 1) if roots else np.empty((0, 1)), h)
    return f"roots={len(roots)} " + " ".join(f"{r:.6f}" for r in roots)


def _orbit(args, cfg):
    return orbit.find_stable_orbit(args.c, cfg.integrator.t_transient, _ode_dt(cfg, args), params=cfg.model)


def _orbit_table(res, n_points):
    t, x = orbit.resample_orbit(res.orbit, n_points)
    d = hormander.delta(x[:, 0], x[:, 1], x[:, 2], x[:, 3]).value
    return np.column_stack([t - t[0], x, d])


def cmd_orbit(args, cfg, out, h):
    res = _orbit(args, cfg)
    tab = _orbit_table(res, args.points)
    write_csv(out / "orbit.csv", ["t", "v", "n", "m", "h", "delta"], tab, h)
    write_csv(out / "phase.csv", ["v", "n"], res.orbit.states[:, :2], h)
    return f"period_ms={res.period:.6f} diagnostic={res.diagnostic:.3g} crossings={res.crossing_times.size}"


def cmd_delta_orbit(args, cfg, out, h):
    res = _orbit(args, cfg)
    t, d = hormander.delta_along(res.orbit)
    write_csv(
        out / "delta_orbit.csv",
        ["t", "v", "n", "m", "h", "delta"],
        np.column_stack([t - t[0], res.orbit.states, d]),
        h,
    )
    sgn = np.sign(d)
    changes = int(np.count_nonzero(sgn[1:] != sgn[:-1]))
    return f"period_ms={res.period:.6f} sign_changes={changes} min_abs_delta={np.min(np.abs(d)):.3e} max_abs_delta={np.max(np.abs(d)):.3e}"


def cmd_simulate_ode(args, cfg, out, h):
    x0 = equilibrium_state(args.c, cfg.model) + np.array([args.dv, 0, 0, 0])
    traj = dynamics.integrate_ode(lambda t, x: rhs_deterministic(t, x, args.c, cfg.model), x0, 0.0, args.t1, _ode_dt(cfg, args))
    write_trajectory_csv(out / "trajectory.csv", traj, h)
    return f"t1={args.t1:.17g} v_end={traj.states[-1, 0]:.17g}"


def cmd_simulate_sde(args, cfg, out, h):
    noise = _tracking_noise(cfg, ConstantInput(args.c), args.xi0)
    model = hh_model(cfg.model, noise)
    x0 = np.r_[equilibrium_state(args.c, cfg.model) + np.array([args.dv, 0, 0, 0]), args.xi0]
    traj = dynamics.simulate_sde(model, x0, 0.0, args.t1, _sde_dt(cfg, args), cfg.seed, args.stream)
    write_trajectory_csv(out / "trajectory.csv", traj, h)
    if args.binary:
        write_trajectory_binary(out / "trajectory.bin", traj)
    md = traj.metadata
    return (
        f"t1={args.t1:.17g} v_end={traj.states[-1, 0]:.17g} "
        f"clamp_events={md['clamp_events']} cir_violations={md['cir_violations']}"
    )


def cmd_control_verify(args, cfg, out, h):
    dt = _ode_dt(cfg, args)
    if args.kind == "imitation":
        cur = PulsingInput(args.a, args.T) if args.a is not None and args.T is not None else ConstantInput(args.c)
        model = hh_model(cfg.model, cfg.noise)
        x0 = np.r_[equilibrium_state(0.0, cfg.model), args.xi0]
        cp = control.control_for_imitation(model, cur, x0, args.t, dt)
    else:
        model = hh_model(cfg.model, cfg.noise)
        x0 = np.r_[equilibrium_state(0.0, cfg.model), args.xi0]
        Z = control.accessibility_path(model, x0, args.z1, args.t, dt)
        cp = control.control_for_accessibility(model, Z)
    err = np.max(np.abs(cp.generated.states - cp.target.states), axis=1)
    names = ["v", "n", "m", "h", "xi"]
    cols = [cp.times, cp.hdot_samples]
    header = ["t", "hdot"]
    for j, nm in enumerate(names):
        cols += [cp.target.states[:, j], cp.generated.states[:, j]]
        header += [f"target_{nm}", f"gen_{nm}"]
    write_csv(out / "control.csv", header + ["err"], np.column_stack(cols + [err]), h)
    return f"kind={args.kind} sup_error={cp.sup_error:.3e}"


def cmd_positivity(args, cfg, out, h):
    if args.target == "equilibrium":
        tg = positivity.make_target(c=args.c, zeta=args.zeta, t=args.t, U=cfg.noise.U, params=cfg.model)
    else:
        tg = positivity.make_target(pulse=(args.a, args.T), zeta=args.zeta, U=cfg.noise.U, params=cfg.model)
    if cfg.noise.kind != "ou":
        raise DomainError("positivity probes carry the target current through an OU input; use --noise-kind ou")
    model = hh_model(cfg.model, tg.noise(cfg.noise.tau, cfg.noise.gamma))
    probe, final = positivity.mc_hitting(
        model, tg.x, tg.x_prime, args.eps, tg.horizon, args.n_paths, cfg.seed, _sde_dt(cfg, args), return_states=True
    )
    d = hormander.delta(*tg.x_prime[:4])
    report = {
        "target": args.target,
        "config_hash": h,
        "delta_at_target": float(d.value),
        "delta_nonzero": bool(d.nonzero),
        **probe.to_dict(),
    }
    # wall-clock time is informative but would break byte-identical reruns
    report.pop("runtime_s", None)
    with open(out / "positivity.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.dump_states:
        write_csv(out / "final_states.csv", ["v", "n", "m", "h", "xi"], final.T, h)
    lo, hi = probe.interval
    return f"target={args.target} hits={probe.hits}/{probe.n_paths} p_hat={probe.estimate:.4g} wilson95=[{lo:.4g}, {hi:.4g}]"


def cmd_lie_check(args, cfg, out, h):
    model = hh_model(cfg.model, cfg.noise)
    x = np.r_[equilibrium_state(args.c, cfg.model), args.xi]
    if not model.in_U(x[-1]):
        raise DomainError(f"xi={args.xi} outside U = {model.U}")
    p = np.r_[0.0, x]
    num = hormander.lie_bracket_numeric(hormander.diffusion_field(model), hormander.drift_field(model), p, args.fd_step)
    ref = hormander.L1_formula(model, x)
    gate_num = num[2 : model.m]
    rel = np.abs(gate_num - ref) / np.maximum(np.abs(ref), 1e-300)
    write_csv(out / "lie_check.csv", ["component", "numeric", "formula", "rel_err"], np.column_stack([np.arange(2, model.m), gate_num, ref, rel]), h)
    return f"max_rel_err={np.max(rel):.3e} time_component={num[0]:.3e}"


COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "delta-scan": cmd_delta_scan,
    "orbit": cmd_orbit,
    "delta-orbit": cmd_delta_orbit,
    "simulate-ode": cmd_simulate_ode,
    "simulate-sde": cmd_simulate_sde,
    "control-verify": cmd_control_verify,
    "positivity": cmd_positivity,
    "lie-check": cmd_lie_check,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        tic = time.perf_counter()
        summary = COMMANDS[args.command](args, cfg, out, _run_hash(cfg, args))
    except DomainError as exc:
        print(f"ivri {args.command}: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericError as exc:
        print(f"ivri {args.command}: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{args.command}: {summary} ({time.perf_counter() - tic:.2f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
