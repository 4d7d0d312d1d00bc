"""
Fixed-step integrators for the deterministic and stochastic neuron models.

* :func:`integrate_ode` -- classical RK4 for ``x' = rhs(t, x)``.
* :func:`simulate_sde` -- Euler-Maruyama for an :class:`~ivri.neuron.IvriModel`,
  one path or many in lockstep.

Noise comes from counter-based Philox streams keyed by ``(seed, stream)``.
Every path owns its own stream and draws its increments in order, so the
realized noise of a path does not depend on how many paths are simulated
next to it or on the chunk size used internally.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError

__all__ = [
    "Trajectory",
    "RngSeed",
    "SDEStats",
    "brownian_increments",
    "integrate_ode",
    "simulate_sde",
    "simulate_sde_final",
    "gating_by_variation_of_constants",
]


@dataclass
class Trajectory:
    """Time-stamped states of one integration.

    Attributes
    ----------
    times : ndarray, shape (N,)
        Strictly increasing times (ms).
    states : ndarray, shape (N, d)
    metadata : dict
        Free-form provenance: model name, integrator, step size, counters.
    """

    times: np.ndarray
    states: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise ValueError("times must be 1-D and states 2-D")
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times and states differ in length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains non-finite states")

    @property
    def dim(self):
        return self.states.shape[1]

    def __len__(self):
        return self.times.shape[0]

    def at(self, t):
        """Linear interpolation of the state at time(s) `t`."""
        cols = [np.interp(t, self.times, self.states[:, j]) for j in range(self.dim)]
        return np.stack(cols, axis=-1)

    def final(self):
        return self.states[-1].copy()


@dataclass(frozen=True)
class RngSeed:
    """Philox key: a 64-bit seed and a stream index (one stream per path)."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64 and 0 <= self.stream < 2**64):
            raise DomainError("seed and stream must be unsigned 64-bit integers")

    def generator(self):
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def brownian_increments(seed, n_steps, dt, stream=0):
    """``n_steps`` i.i.d. ``N(0, dt)`` increments from the stream ``(seed, stream)``."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not dt > 0:
        raise ValueError("dt must be positive")
    rs = seed if isinstance(seed, RngSeed) else RngSeed(int(seed), int(stream))
    return math.sqrt(dt) * rs.generator().standard_normal(n_steps)


def _step_sizes(t0, t1, dt):
    if not dt > 0:
        raise DomainError("dt must be positive")
    if not t1 > t0:
        raise DomainError("need t1 > t0")
    n = int(math.ceil((t1 - t0) / dt - 1e-9))
    h = np.full(n, dt)
    h[-1] = (t1 - t0) - dt * (n - 1)
    times = t0 + dt * np.arange(n + 1)
    times[-1] = t1
    return h, times


def integrate_ode(rhs, x0, t0, t1, dt, record_every=1):
    """Classical fourth-order Runge-Kutta with fixed step `dt`.

    The last step is shortened so that the trajectory ends exactly at `t1`.
    Every `record_every`-th state is stored, plus the final one.

    Raises
    ------
    NumericError
        If the right-hand side produces a non-finite value; the message
        names the last time with a finite state.
    """
    h, times = _step_sizes(t0, t1, dt)
    x = np.array(x0, dtype=float)
    keep = [0]
    out = [x.copy()]
    t = t0
    for k, hk in enumerate(h):
        k1 = rhs(t, x)
        k2 = rhs(t + hk / 2, x + hk / 2 * k1)
        k3 = rhs(t + hk / 2, x + hk / 2 * k2)
        k4 = rhs(t + hk, x + hk * k3)
        x_new = x + hk / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x_new)):
            raise NumericError(f"non-finite state after t = {t:.17g} (last good time)")
        x = x_new
        t = times[k + 1]
        if (k + 1) % record_every == 0 or k + 1 == len(h):
            keep.append(k + 1)
            out.append(x.copy())
    return Trajectory(times[keep], np.array(out), {"integrator": "rk4", "dt": dt})


@dataclass
class SDEStats:
    """Counters collected by the Euler-Maruyama stepper."""

    clamp_events: int = 0
    cir_violations: int = 0


def _check_start(model, x0):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[0] != model.m:
        raise DomainError(f"state must have {model.m} components, got {x0.shape[0]}")
    gates = x0[1 : model.m - 1]
    if np.any(gates < 0) or np.any(gates > 1):
        raise DomainError("gating components of the start state must lie in [0, 1]")
    if not np.all(model.in_U(x0[-1])):
        raise DomainError(f"input component of the start state must lie in U = {model.U}")
    if not np.all(np.isfinite(x0)):
        raise DomainError("start state must be finite")
    return x0


class _NormalSource:
    """Per-path standard normals drawn in chunks from independent Philox streams."""

    def __init__(self, seed, streams, chunk):
        self.gens = [RngSeed(int(seed), int(s)).generator() for s in streams]
        self.chunk = chunk
        self.buf = None
        self.pos = chunk

    def next(self):
        if self.pos == self.chunk:
            if self.buf is None:
                self.buf = np.empty((len(self.gens), self.chunk))
            for g, row in zip(self.gens, self.buf):
                g.standard_normal(out=row)
            self.pos = 0
        z = self.buf[:, self.pos]
        self.pos += 1
        return z


def _em_loop(model, x, h, times, draw, stats, record_every):
    # x: (m, P).  Component 1 takes F dt plus the realized increment of x_m.
    m = model.m
    lo_U = model.U[0]
    recorded = [x.copy()] if record_every else None
    keep = [0]
    for k, hk in enumerate(h):
        t = times[k]
        xm = x[-1]
        dW = math.sqrt(hk) * draw()
        dxm = model.b_m(t, xm) * hk + model.sigma(xm) * dW
        J = model.J(x)
        x_new = np.empty_like(x)
        x_new[-1] = xm + dxm
        x_new[0] = x[0] + (J[0] * hk + dxm)
        for i in range(1, m - 1):
            g = x[i] + J[i] * hk
            out = (g < 0.0) | (g > 1.0)
            if np.any(out):
                stats.clamp_events += int(np.count_nonzero(out))
                g = np.clip(g, 0.0, 1.0)
            x_new[i] = g
        if lo_U > -math.inf:
            stats.cir_violations += int(np.count_nonzero(x_new[-1] <= lo_U))
        if not np.all(np.isfinite(x_new)):
            raise NumericError(f"non-finite state after t = {t:.17g} (last good time)")
        x = x_new
        if record_every and ((k + 1) % record_every == 0 or k + 1 == len(h)):
            keep.append(k + 1)
            recorded.append(x.copy())
    return x, (times[keep], recorded)


def simulate_sde(model, x0, t0, t1, dt=1e-3, seed=0, stream=0, dW=None, record_every=1):
    """Euler-Maruyama path of `model` started at `x0`.

    Parameters
    ----------
    model : IvriModel
    x0 : array_like, shape (m,)
        Start state in ``R x [0, 1]^(m-2) x U``.
    seed, stream : int
        Philox key of the path's Brownian increments.
    dW : array_like, optional
        Explicit standard-normal draws (one per step) replacing the stream.
    record_every : int
        Store every k-th state (and always the last).

    Returns
    -------
    Trajectory
        ``metadata`` carries ``clamp_events`` (gating values pushed back into
        ``[0, 1]``) and ``cir_violations`` (steps ending at or below the
        lower end of ``U``).
    """
    x0 = _check_start(model, x0)
    h, times = _step_sizes(t0, t1, dt)
    if dW is not None:
        z = np.asarray(dW, dtype=float)
        if z.shape[0] != h.shape[0]:
            raise ValueError(f"expected {h.shape[0]} normal draws, got {z.shape[0]}")
        it = iter(z)

        def draw():
            return np.array([next(it)])
    else:
        src = _NormalSource(seed, [stream], chunk=min(4096, h.shape[0]))
        draw = src.next
    stats = SDEStats()
    _, (kept_t, rec) = _em_loop(model, x0[:, None].copy(), h, times, draw, stats, record_every)
    states = np.array([r[:, 0] for r in rec])
    meta = {
        "model": model.name,
        "integrator": "euler-maruyama",
        "dt": dt,
        "seed": seed,
        "stream": stream,
        "clamp_events": stats.clamp_events,
        "cir_violations": stats.cir_violations,
    }
    return Trajectory(kept_t, states, meta)


def simulate_sde_final(model, x0, t0, t1, dt=1e-3, seed=0, n_paths=1, first_stream=0, chunk=256):
    """Final states of `n_paths` independent Euler-Maruyama paths.

    Path ``j`` uses stream ``first_stream + j``, so its result is the same as
    a single :func:`simulate_sde` call with that stream.

    Returns
    -------
    final : ndarray, shape (m, n_paths)
    stats : SDEStats
    """
    x0 = _check_start(model, x0)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    h, times = _step_sizes(t0, t1, dt)
    src = _NormalSource(seed, range(first_stream, first_stream + n_paths), chunk=min(chunk, h.shape[0]))
    x = np.repeat(x0[:, None], n_paths, axis=1)
    stats = SDEStats()
    final, _ = _em_loop(model, x, h, times, src.next, stats, record_every=0)
    return final, stats


def gating_by_variation_of_constants(times, v, x0, a, b):
    """Gating path implied by a voltage path through the linear gate equation.

    Evaluates ``x_t = x_0 e^{-A(t)} + int_0^t e^{-(A(t) - A(s))} b(v_s) ds`` with
    ``A(t) = int_0^t a(v_s) ds``, all integrals by the trapezoidal rule on
    the given time grid.
    """
    times = np.asarray(times, dtype=float)
    av, bv = a(np.asarray(v)), b(np.asarray(v))
    dt = np.diff(times)
    decay = np.exp(-0.5 * dt * (av[1:] + av[:-1]))
    out = np.empty_like(times)
    out[0] = x0
    # trapezoid step of the integral, carried forward with the decay factor
    for k in range(dt.shape[0]):
        out[k + 1] = decay[k] * out[k] + 0.5 * dt[k] * (bv[k + 1] + decay[k] * bv[k])
    return out
