"""
How often does a noisy neuron reach a target?
=============================================

The input follows an Ornstein-Uhlenbeck process whose noiseless path carries a
deterministic current.  Paths start at one state and the fraction that ends
inside a small ball around a target state is reported with a Wilson interval.
Distances use millivolts / 100, the gates as they are, and the input divided by
its stationary spread.
"""

import numpy as np

from ivri.hormander import delta
from ivri.positivity import default_probe_model, kde_density, make_target, mc_hitting

n_paths = 2000  # the acceptance suite uses 10^4

const = make_target(c=2.0, t=5.0)
probe = mc_hitting(default_probe_model(const), const.x, const.x_prime, 0.15, const.horizon, n_paths, seed=1)
print(f"constant input 2, 5 ms: p = {probe.estimate:.4f}, 95% interval {np.round(probe.interval, 4)}")

orbit_target = make_target(pulse=(15.0, 12.56))
probe = mc_hitting(
    default_probe_model(orbit_target), orbit_target.x, orbit_target.x_prime, 0.15, orbit_target.horizon, n_paths, seed=2
)
print(f"one period of the pulsing input: p = {probe.estimate:.4f}, 95% interval {np.round(probe.interval, 4)}")
print("determinant at the orbit target:", f"{delta(*orbit_target.x_prime[:4]).value:.3e}")

# kernel density of the time-5 state, evaluated at the constant-input target
dens, _ = kde_density(default_probe_model(const), const.x, 5.0, const.x_prime, n_paths=n_paths, seed=3)
print(f"density estimate at the target: {dens:.4g}")
