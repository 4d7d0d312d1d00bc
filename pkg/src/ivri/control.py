"""
Cameron-Martin controls steering the noiseless (Stratonovich) flow.

Replacing ``dW`` by ``hdot(s) ds`` turns the SDE into the controlled ODE::

    X' = b~(s, X) + sigma(X_m) hdot(s) (e_1 + e_m)

where ``b~`` is the Stratonovich drift.  Two controls are built here:

* accessibility -- drive ``x_1`` along a smooth bridge ``gamma`` to a level
  ``z_1`` and hold it there, so the gates relax to their steady states at
  ``z_1`` (:func:`accessibility_path`, :func:`control_for_accessibility`);
* imitation -- make ``x_m`` move like ``x_m(0) + int I``, so that the first
  ``m - 1`` coordinates follow the deterministic model driven by the current
  ``I`` (:func:`control_for_imitation`).

Both controls are open loop: ``hdot`` is a function of time only.  It is
evaluated at every Runge-Kutta stage, which keeps the controlled flow
fourth-order accurate.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .dynamics import Trajectory, integrate_ode
from .errors import DomainError

__all__ = [
    "ControlPath",
    "smooth_bridge",
    "accessibility_path",
    "control_for_accessibility",
    "control_for_imitation",
    "integrate_controlled",
    "deterministic_path",
]


@dataclass
class ControlPath:
    """An open-loop control together with the path it is meant to produce.

    Attributes
    ----------
    times : ndarray
        Integration grid.
    hdot : callable
        The control ``s -> hdot(s)``.
    hdot_samples : ndarray
        ``hdot`` on the grid.
    target, generated : Trajectory
        The prescribed path and the solution of the controlled ODE.
    sup_error : float
        ``max |generated - target|`` over the grid and all components.
    """

    times: np.ndarray
    hdot: object
    hdot_samples: np.ndarray
    target: Trajectory
    generated: Trajectory
    sup_error: float


def smooth_bridge(x1, z1):
    """Quintic ramp from `x1` at ``s = 0`` to `z1` at ``s = 1``, constant afterwards.

    First and second derivatives vanish at both ends, so the continuation
    by the constant `z1` is C^2.

    Returns
    -------
    gamma, dgamma : callable
    """
    span = z1 - x1

    def gamma(s):
        u = np.clip(s, 0.0, 1.0)
        return x1 + span * u**3 * (10.0 - 15.0 * u + 6.0 * u * u)

    def dgamma(s):
        u = np.clip(s, 0.0, 1.0)
        return span * 30.0 * u * u * (1.0 - u) ** 2

    return gamma, dgamma


def _require_unbounded_input(model):
    if model.U != (-np.inf, np.inf):
        raise DomainError(
            f"accessibility construction needs an unbounded input interval; model has U = {model.U}"
        )


def accessibility_path(model, x, z1, t, dt=0.01):
    """Deterministic path that brings ``x_1`` from ``x[0]`` to `z1` and holds it there.

    ``Z_1 = gamma`` (:func:`smooth_bridge`), the gates solve their linear
    equations with ``x_1 = gamma``, and
    ``Z_m(s) = x_m - x_1 + gamma(s) - int_0^s F(Z_u) du``.  The integral of
    ``F`` is carried as an extra ODE component.

    Raises
    ------
    DomainError
        If ``t <= 1`` or the model's input interval is bounded (the input
        coordinate of ``Z`` is not confined to ``U``).
    """
    _require_unbounded_input(model)
    if not t > 1:
        raise DomainError("accessibility horizon t must exceed 1")
    x = np.asarray(x, dtype=float)
    m = model.m
    gamma, dgamma = smooth_bridge(x[0], z1)

    def rhs(s, y):
        g = gamma(s)
        J = model.J(np.concatenate([[g], y[: m - 2]]))
        return np.array([*J[1:], J[0]])

    aux = integrate_ode(rhs, np.concatenate([x[1 : m - 1], [0.0]]), 0.0, t, dt)
    s = aux.times
    states = np.empty((s.shape[0], m))
    states[:, 0] = gamma(s)
    states[:, 1 : m - 1] = aux.states[:, : m - 2]
    states[:, m - 1] = x[m - 1] - x[0] + gamma(s) - aux.states[:, m - 2]
    meta = {"integrator": "rk4", "dt": dt, "z1": z1, "construction": "accessibility"}
    return Trajectory(s, states, meta)


def _path_derivative(model, Z, dgamma):
    d = np.empty_like(Z.states)
    for k, zk in enumerate(Z.states):
        J = model.J(zk)
        d[k, 0] = dgamma(Z.times[k])
        d[k, 1 : model.m - 1] = J[1:]
        d[k, -1] = d[k, 0] - J[0]
    return d


def _strat_correction(model, xm):
    return 0.5 * model.sigma(xm) * model.sigma_prime(xm)


def _check_sigma(model, xm):
    s = model.sigma(xm)
    if np.any(~(np.asarray(s) > 0)):
        raise DomainError("diffusion coefficient vanishes on the requested input path")
    return s


def _sup_error(a, b):
    if a.states.shape != b.states.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise ValueError("target and generated paths live on different grids")
    return float(np.max(np.abs(a.states - b.states)))


def control_for_accessibility(model, Z, z1=None, refine=4):
    """Control that makes the controlled flow follow the accessibility path `Z`.

    ``hdot = (Z_m' - b_m(s, Z_m) + sigma sigma'(Z_m) / 2) / sigma(Z_m)`` with
    ``Z_m' = gamma' - F(Z)``.  Between grid points ``Z`` is a cubic Hermite
    interpolant of the same path rebuilt on a grid `refine` times finer, so
    the interpolation error stays well below the integrator's own error.
    """
    _require_unbounded_input(model)
    z1 = Z.metadata.get("z1") if z1 is None else z1
    if z1 is None:
        raise ValueError("bridge end level z1 is needed (not in Z.metadata)")
    if refine < 1:
        raise ValueError("refine must be >= 1")
    _, dgamma = smooth_bridge(Z.states[0, 0], z1)
    dt = Z.metadata.get("dt", float(Z.times[1] - Z.times[0]))
    dense = Z if refine == 1 else accessibility_path(model, Z.states[0], z1, Z.times[-1], dt / refine)
    spline = CubicHermiteSpline(dense.times, dense.states, _path_derivative(model, dense, dgamma), axis=0)
    _check_sigma(model, dense.states[:, -1])

    def hdot(s):
        z = spline(s)
        zm = z[..., -1]
        J = model.J(np.moveaxis(z, -1, 0))
        dzm = dgamma(s) - J[0]
        return (dzm - model.b_m(s, zm) + _strat_correction(model, zm)) / model.sigma(zm)

    gen = integrate_controlled(model, Z.states[0], hdot, Z.times[-1], dt, t0=Z.times[0])
    return ControlPath(Z.times, hdot, hdot(Z.times), Z, gen, _sup_error(Z, gen))


def _running_integral(current):
    if hasattr(current, "integral"):
        return current.integral

    def integral(s):
        s = np.atleast_1d(s)
        out = np.array([quad(current, 0.0, float(si), limit=200)[0] for si in s])
        return out if out.size > 1 else float(out[0])

    return integral


def deterministic_path(model, x0, current, t, dt=0.01):
    """Deterministic model driven by `current`, with ``x_m = x_m(0) + int I``.

    The first ``m - 1`` coordinates solve ``x_1' = F + I`` and the gate
    equations; the last one is the running integral of the current.
    """
    x0 = np.asarray(x0, dtype=float)
    m = model.m
    integral = _running_integral(current)

    def rhs(s, y):
        J = model.J(y)
        return np.array([J[0] + current(s), *J[1:]])

    traj = integrate_ode(rhs, x0[: m - 1], 0.0, t, dt)
    xm = x0[m - 1] + np.array([integral(s) for s in traj.times])
    return Trajectory(traj.times, np.column_stack([traj.states, xm]), {"integrator": "rk4", "dt": dt})


def control_for_imitation(model, current, x0, t, dt=0.01):
    """Control under which the controlled flow imitates the input `current`.

    With ``chi(s) = x_m(0) + int_0^s I``,
    ``hdot = (I(s) - b_m(s, chi) + sigma sigma'(chi) / 2) / sigma(chi)``.
    The target is :func:`deterministic_path` from `x0` (full ``m``-state).

    Raises
    ------
    DomainError
        If ``chi`` leaves ``U`` or ``sigma`` vanishes on it.
    """
    x0 = np.asarray(x0, dtype=float)
    integral = _running_integral(current)
    xm0 = x0[-1]
    target = deterministic_path(model, x0, current, t, dt)
    chi = target.states[:, -1]
    if not np.all(model.in_U(chi)):
        raise DomainError(f"input path x_m(0) + int I leaves U = {model.U}")
    _check_sigma(model, chi)

    def hdot(s):
        c = xm0 + integral(s)
        return (current(s) - model.b_m(s, c) + _strat_correction(model, c)) / model.sigma(c)

    gen = integrate_controlled(model, x0, hdot, t, dt)
    samples = np.array([hdot(s) for s in target.times])
    return ControlPath(target.times, hdot, samples, target, gen, _sup_error(target, gen))


def integrate_controlled(model, x0, hdot, t, dt=0.01, t0=0.0):
    """RK4 solution of ``X' = b~(s, X) + sigma(X_m) hdot(s) (e_1 + e_m)`` on ``[t0, t]``."""

    def rhs(s, x):
        return model.strat_drift(s, x) + model.diffusion(x) * hdot(s)

    traj = integrate_ode(rhs, np.asarray(x0, dtype=float), t0, t, dt)
    traj.metadata.update({"model": model.name, "controlled": True})
    return traj
