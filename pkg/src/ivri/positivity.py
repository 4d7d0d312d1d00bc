"""
Monte Carlo probes of transition probabilities and densities.

Hitting frequencies of small balls around target states are estimated from
Euler-Maruyama paths and reported with Wilson score intervals; a product
Gaussian kernel density estimate gives a pointwise density probe.

Distances use scaled coordinates: millivolts divided by 100, gates as they
are, and the input divided by its stationary spread (``NoiseSpec.xi_scale``).
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .dynamics import simulate_sde_final
from .errors import DomainError
from .inputs import ConstantInput, PulsingInput
from .neuron import DEFAULT_PARAMS, equilibrium_state, hh_model
from .noise import ConstantSignal, NoiseSpec, TrackingSignal
from .orbit import find_stable_orbit, section_point

__all__ = [
    "Z95",
    "wilson_interval",
    "coordinate_scale",
    "HitProbe",
    "TargetPair",
    "make_target",
    "mc_hitting",
    "ou_marginal",
    "ou_ball_probability",
    "scott_bandwidth",
    "kde_from_samples",
    "kde_box_mass",
    "kde_density",
    "default_probe_model",
]

# two-sided 95% standard normal quantile
Z95 = 1.959963984540054


def wilson_interval(hits, n, z=Z95):
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= hits <= n:
        raise ValueError("hits must lie in [0, n]")
    p = hits / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    # the ends are exactly 0 and 1 at the extremes; rounding would leave p outside
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == n else min(1.0, centre + half)
    return lo, hi


def coordinate_scale(noise, m=5):
    """Per-coordinate weights ``(1/100, 1, ..., 1, 1/xi_scale)`` of the ball metric."""
    w = np.ones(m)
    w[0] = 0.01
    w[-1] = 1.0 / noise.xi_scale if noise.xi_scale > 0 else 1.0
    return w


@dataclass
class HitProbe:
    """Result of a hitting-frequency experiment."""

    start: np.ndarray
    center: np.ndarray
    radius: float
    horizon: float
    n_paths: int
    hits: int
    estimate: float
    interval: tuple
    coords: tuple
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "start": self.start.tolist(),
            "center": self.center.tolist(),
            "radius": self.radius,
            "horizon": self.horizon,
            "n_paths": self.n_paths,
            "hits": self.hits,
            "estimate": self.estimate,
            "interval": list(self.interval),
            "coords": list(self.coords),
            **self.metadata,
        }


@dataclass
class TargetPair:
    """Start state `x` and target `x_prime` that share their first four coordinates.

    `current` is the deterministic input carried by the noise signal: the
    input coordinate moves from ``x[4]`` to ``x_prime[4]`` by its integral
    over ``[0, horizon]``.
    """

    x: np.ndarray
    x_prime: np.ndarray
    horizon: float
    current: object
    kind: str

    def noise(self, tau=1.0, gamma=0.5):
        """OU input whose noiseless path is ``x[4] + int_0^s I``."""
        return NoiseSpec("ou", tau, gamma, TrackingSignal(self.current, float(self.x[-1]), tau))


def _check_input_path(zeta, lo_end, hi_end, U):
    lo, hi = U
    if not (lo < min(zeta, lo_end, hi_end) and max(zeta, lo_end, hi_end) < hi):
        raise DomainError(f"input path leaves U = {U}")


def make_target(c=None, pulse=None, zeta=0.0, t=None, U=(-math.inf, math.inf), orbit=None, params=DEFAULT_PARAMS):
    """Equilibrium or orbit target pair.

    Parameters
    ----------
    c : float
        Constant input; the pair is the equilibrium under `c` with input
        coordinate ``zeta`` and ``zeta + c t``.  Needs `t`.
    pulse : (a, T)
        Input ``a (1 + sin(2 pi s / T))``; both points sit at the ``v = 0``
        section of the stable orbit under the constant input ``a`` (or the
        given `orbit`), with input coordinate ``zeta`` and ``zeta + a T``.
        The horizon is ``T`` unless `t` is given.
    U : tuple
        Admissible input interval; the input path must stay inside.
    """
    if (c is None) == (pulse is None):
        raise ValueError("give exactly one of c or pulse")
    if c is not None:
        if t is None or t < 0:
            raise ValueError("constant-input target needs t >= 0")
        _check_input_path(zeta, zeta, zeta + c * t, U)
        eq = equilibrium_state(c, params)
        return TargetPair(np.r_[eq, zeta], np.r_[eq, zeta + c * t], t, ConstantInput(c), "equilibrium")
    a, T = pulse
    current = PulsingInput(a, T)
    horizon = T if t is None else t
    # I >= 0, so the running integral is monotone between its end values
    _check_input_path(zeta, zeta, zeta + current.integral(horizon), U)
    if orbit is None:
        orbit = find_stable_orbit(a, params=params)
    y = section_point(orbit)
    return TargetPair(np.r_[y, zeta], np.r_[y, zeta + current.integral(horizon)], horizon, current, "orbit")


def mc_hitting(model, start, center, radius, horizon, n_paths=10_000, seed=0, dt=1e-3, coords=None, return_states=False):
    """Fraction of paths from `start` that end in the scaled ball around `center`.

    Parameters
    ----------
    coords : sequence of int, optional
        Restrict the distance to these coordinates (e.g. ``[4]`` for the
        input marginal); default all.

    Returns
    -------
    HitProbe, or ``(HitProbe, final_states)`` if `return_states`.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    tic = time.perf_counter()
    final, stats = simulate_sde_final(model, start, 0.0, horizon, dt, seed=seed, n_paths=n_paths)
    w = coordinate_scale(model.noise, model.m)
    idx = np.arange(model.m) if coords is None else np.asarray(coords)
    diff = (final[idx] - np.asarray(center, dtype=float)[idx, None]) * w[idx, None]
    hits = int(np.count_nonzero(np.sqrt(np.sum(diff * diff, axis=0)) <= radius))
    probe = HitProbe(
        start=np.asarray(start, dtype=float),
        center=np.asarray(center, dtype=float),
        radius=radius,
        horizon=horizon,
        n_paths=n_paths,
        hits=hits,
        estimate=hits / n_paths,
        interval=wilson_interval(hits, n_paths),
        coords=tuple(int(i) for i in idx),
        metadata={
            "seed": seed,
            "dt": dt,
            "clamp_events": stats.clamp_events,
            "runtime_s": time.perf_counter() - tic,
        },
    )
    return (probe, final) if return_states else probe


def ou_marginal(noise, xi0, t):
    """Mean and variance of an OU input at time `t` for a constant signal."""
    if noise.kind != "ou" or not isinstance(noise.signal, ConstantSignal):
        raise DomainError("closed-form marginal needs OU input with a constant signal")
    s0 = noise.signal(0.0)
    e = math.exp(-noise.tau * t)
    mean = s0 + (xi0 - s0) * e
    var = noise.gamma**2 * (1.0 - e * e) / 2.0
    return mean, var


def ou_ball_probability(noise, xi0, t, center, radius):
    """Exact probability that the OU input lands within ``radius * xi_scale`` of `center`."""
    mean, var = ou_marginal(noise, xi0, t)
    sd = math.sqrt(var)
    half = radius * noise.xi_scale
    return float(ndtr((center + half - mean) / sd) - ndtr((center - half - mean) / sd))



def scott_bandwidth(samples):
    """Scott's rule ``sd_j * N^(-1/(d+4))`` per coordinate; samples have shape (d, N)."""
    d, n = samples.shape
    return np.std(samples, axis=1, ddof=1) * n ** (-1.0 / (d + 4))


def kde_from_samples(samples, points, bandwidth=None, scale=None, block=2048):
    """Product-Gaussian kernel density estimate.

    Parameters
    ----------
    samples : ndarray, shape (d, N)
    points : ndarray, shape (d, M) or (d,)
    bandwidth : array_like, optional
        Per-coordinate bandwidths in the scaled coordinates; Scott's rule
        by default.
    scale : array_like, optional
        Coordinate weights applied before smoothing; the returned density
        is in the original coordinates.
    """
    samples = np.asarray(samples, dtype=float)
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = pts[:, None] if single else pts
    d, n = samples.shape
    w = np.ones(d) if scale is None else np.asarray(scale, dtype=float)
    ys, yp = samples * w[:, None], pts * w[:, None]
    h = scott_bandwidth(ys) if bandwidth is None else np.broadcast_to(np.asarray(bandwidth, dtype=float), (d,))
    if np.any(~(h > 0)):
        raise ValueError("bandwidths must be positive")
    norm = np.prod(w) / (n * np.prod(h) * (2 * math.pi) ** (d / 2))
    out = np.empty(yp.shape[1])
    for j in range(0, yp.shape[1], block):
        z = (yp[:, j : j + block, None] - ys[:, None, :]) / h[:, None, None]
        out[j : j + block] = np.exp(-0.5 * np.sum(z * z, axis=0)).sum(axis=1)
    out *= norm
    return out[0] if single else out


def kde_box_mass(samples, lo, hi, bandwidth=None, scale=None):
    """Mass the product-Gaussian estimate puts on the box ``[lo, hi]`` (closed form)."""
    samples = np.asarray(samples, dtype=float)
    d = samples.shape[0]
    w = np.ones(d) if scale is None else np.asarray(scale, dtype=float)
    ys = samples * w[:, None]
    h = scott_bandwidth(ys) if bandwidth is None else np.broadcast_to(np.asarray(bandwidth, dtype=float), (d,))
    a = (np.asarray(lo, dtype=float) * w)[:, None]
    b = (np.asarray(hi, dtype=float) * w)[:, None]
    per = ndtr((b - ys) / h[:, None]) - ndtr((a - ys) / h[:, None])
    return float(np.mean(np.prod(per, axis=0)))


def kde_density(model, x0, t, eval_points, n_paths=10_000, bandwidth=None, seed=0, dt=1e-3):
    """Density of the time-`t` state from `x0`, estimated at `eval_points`.

    Smoothing happens in the scaled coordinates of :func:`coordinate_scale`.

    Returns
    -------
    density : ndarray or float
    samples : ndarray, shape (m, n_paths)
    """
    if bandwidth is not None and np.any(np.asarray(bandwidth) <= 0):
        raise ValueError("bandwidth must be positive")
    final, _ = simulate_sde_final(model, x0, 0.0, t, dt, seed=seed, n_paths=n_paths)
    w = coordinate_scale(model.noise, model.m)
    return kde_from_samples(final, eval_points, bandwidth, scale=w), final


def default_probe_model(target, tau=1.0, gamma=0.5, params=DEFAULT_PARAMS):
    """HH model whose OU input carries the target's deterministic current."""
    return hh_model(params, target.noise(tau, gamma))

