"""
Steering the noiseless flow with an open-loop control
=====================================================

Replacing the Brownian increment by ``hdot(s) ds`` turns the stochastic model
into an ordinary differential equation.  Two controls are built: one makes the
input coordinate move like the running integral of a chosen current, so the
neuron behaves as if driven by that current; the other moves the voltage along
a smooth ramp and holds it, letting the gates relax.
"""

import numpy as np

from ivri.control import accessibility_path, control_for_accessibility, control_for_imitation
from ivri.inputs import PulsingInput
from ivri.neuron import GATES, equilibrium_state, gate_infty, hh_model
from ivri.noise import NoiseSpec

model = hh_model(noise=NoiseSpec(tau=1.0, gamma=0.5))
x0 = np.r_[equilibrium_state(0.0), 0.0]

# imitation of a pulsing current; the error falls about 16x per halving of dt
current = PulsingInput(15.0, 12.56)
for dt in (0.02, 0.01, 0.005):
    cp = control_for_imitation(model, current, x0, 25.0, dt)
    print(f"imitation dt = {dt:<6} sup error {cp.sup_error:.3e}")
print(f"voltage at 25 ms: {cp.generated.final()[0]:.4f} mV (target {cp.target.final()[0]:.4f})")

# ramp the voltage from -5 mV to 2 mV in 1 ms and hold it
start = np.array([-5.0, 0.6, 0.2, 0.3, 0.4])
Z = accessibility_path(model, start, 2.0, 10.0)
cp = control_for_accessibility(model, Z)
print(f"accessibility sup error {cp.sup_error:.3e}")
for i, g in enumerate(GATES, start=1):
    print(f"gate {g}: end {Z.final()[i]:.6f}, steady state at 2 mV {gate_infty(g, 2.0):.6f}")
