"""
Equilibria and the attracting periodic orbit of the deterministic model.

Under a constant input ``c`` the 4D Hodgkin-Huxley system has the single
equilibrium ``(v_c, n_inf(v_c), m_inf(v_c), h_inf(v_c))``.  When it is
unstable, trajectories started next to it settle on a limit cycle; the cycle
is located through upward crossings of ``v = 0`` (the Poincare section).
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, integrate_ode
from .errors import NoOrbitError, NumericError
from .neuron import DEFAULT_PARAMS, equilibrium_state, rhs_deterministic

__all__ = [
    "StabilityReport",
    "OrbitResult",
    "classify_equilibrium",
    "upcrossings",
    "find_stable_orbit",
    "section_point",
    "resample_orbit",
    "SCALE",
]

# (v, n, m, h) weights of the loop-comparison norm: millivolts / 100
SCALE = np.array([0.01, 1.0, 1.0, 1.0])

# equilibria with max Re(lambda) above this are reported unstable
UNSTABLE_TOL = 1e-8


@dataclass
class StabilityReport:
    c: float
    equilibrium: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    max_real: float
    unstable: bool
    residual: float


@dataclass
class OrbitResult:
    """Limit cycle under constant input `c`.

    Attributes
    ----------
    period : float
        Mean spacing (ms) of the last four section crossings.
    crossing_times : ndarray
        Times of all upward ``v = 0`` crossings after the transient.
    section_states : ndarray, shape (k, 4)
        Interpolated states at those crossings.
    orbit : Trajectory
        One loop, from the second-to-last crossing to the last one.
    diagnostic : float
        Sup distance in the scaled norm between the last two loops,
        resampled on a common phase grid.
    """

    c: float
    period: float
    crossing_times: np.ndarray
    section_states: np.ndarray
    orbit: Trajectory
    diagnostic: float


def _jacobian(c, x, params, step=1e-6):
    d = x.shape[0]
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        J[:, j] = (rhs_deterministic(0.0, x + e, c, params) - rhs_deterministic(0.0, x - e, c, params)) / (2 * step)
    return J


def classify_equilibrium(c, params=DEFAULT_PARAMS, fd_step=1e-6):
    """Linear stability of the equilibrium under constant input `c`.

    The Jacobian is taken by central differences; its eigenvalues come from
    LAPACK's Hessenberg/QR driver (``numpy.linalg.eigvals``).

    Raises
    ------
    DomainError
        If `c` is outside the range of ``F_infty`` on ``(-15, 30)``.
    NumericError
        If the eigenvalue iteration fails to converge.
    """
    x = equilibrium_state(c, params)
    residual = float(np.max(np.abs(rhs_deterministic(0.0, x, c, params))))
    J = _jacobian(c, x, params, fd_step)
    try:
        ev = np.linalg.eigvals(J)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue iteration did not converge: {exc}") from None
    mr = float(np.max(ev.real))
    return StabilityReport(c, x, J, ev, mr, mr > UNSTABLE_TOL, residual)


def upcrossings(times, values, level=0.0):
    """Upward crossings of `level` by a sampled signal.

    Returns the crossing times, linearly interpolated between the bracketing
    samples, and for each the index ``k`` of the sample just before it and
    the fraction ``s`` with ``t = t_k + s (t_{k+1} - t_k)``.
    """
    times = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float) - level
    k = np.flatnonzero((y[:-1] < 0) & (y[1:] >= 0))
    s = -y[k] / (y[k + 1] - y[k])
    return times[k] + s * (times[k + 1] - times[k]), k, s


def _interp_states(traj, k, s):
    return traj.states[k] + s[:, None] * (traj.states[k + 1] - traj.states[k])


def _loop(traj, k0, s0, k1, s1):
    # one loop with interpolated section states at both ends
    x0 = traj.states[k0] + s0 * (traj.states[k0 + 1] - traj.states[k0])
    x1 = traj.states[k1] + s1 * (traj.states[k1 + 1] - traj.states[k1])
    t0 = traj.times[k0] + s0 * (traj.times[k0 + 1] - traj.times[k0])
    t1 = traj.times[k1] + s1 * (traj.times[k1 + 1] - traj.times[k1])
    inner = slice(k0 + 1, k1 + 1)
    times = np.concatenate([[t0], traj.times[inner], [t1]])
    states = np.vstack([x0, traj.states[inner], x1])
    # drop samples that coincide with an interpolated end point
    keep = np.concatenate([[True], np.diff(times) > 1e-12])
    return Trajectory(times[keep], states[keep], dict(traj.metadata))


def resample_orbit(orbit, n_points=256):
    """Orbit states at `n_points` equidistant phases in ``[0, 1)``."""
    t = orbit.times
    phase_t = t[0] + (t[-1] - t[0]) * np.arange(n_points) / n_points
    return phase_t, orbit.at(phase_t)


def find_stable_orbit(
    c,
    t_transient=150.0,
    dt=0.01,
    t_window=100.0,
    perturbation=(1.0, 0.0, 0.0, 0.0),
    n_phase=256,
    params=DEFAULT_PARAMS,
):
    """Attracting periodic orbit under constant input `c`.

    Integrates from the equilibrium shifted by `perturbation` (default +1 mV)
    for ``t_transient + t_window`` ms and uses the upward ``v = 0`` crossings
    inside the window.

    Raises
    ------
    NoOrbitError
        If fewer than six crossings are found in the window.
    """
    x0 = equilibrium_state(c, params) + np.asarray(perturbation, dtype=float)

    def rhs(t, x):
        return rhs_deterministic(t, x, c, params)

    traj = integrate_ode(rhs, x0, 0.0, t_transient + t_window, dt)
    traj.metadata.update({"model": "hodgkin-huxley", "c": c})
    tc, k, s = upcrossings(traj.times, traj.states[:, 0])
    after = tc > t_transient
    tc, k, s = tc[after], k[after], s[after]
    if tc.size < 6:
        raise NoOrbitError(f"only {tc.size} upward crossings of v = 0 after the transient (need 6)")
    period = float((tc[-1] - tc[-4]) / 3.0)
    prev = _loop(traj, k[-3], s[-3], k[-2], s[-2])
    last = _loop(traj, k[-2], s[-2], k[-1], s[-1])
    _, a = resample_orbit(prev, n_phase)
    _, b = resample_orbit(last, n_phase)
    diag = float(np.max(np.abs((a - b) * SCALE)))
    return OrbitResult(
        c=c,
        period=period,
        crossing_times=tc,
        section_states=_interp_states(traj, k, s),
        orbit=last,
        diagnostic=diag,
    )


def section_point(orbit):
    """State ``(0, n*, m*, h*)`` at the final upward crossing of ``v = 0``."""
    x = orbit.section_states[-1].copy()
    x[0] = 0.0 if abs(x[0]) < 1e-9 else x[0]
    return x
