"""
The equilibrium branch and its gate determinant
===============================================

Under a constant input ``c`` the Hodgkin-Huxley model rests at a voltage
``v_c`` with every gate at its steady state.  This script walks along that
branch, prints the input needed to hold each voltage, and tracks the sign of
the 3x3 determinant built from voltage derivatives of the gate drifts.
"""

import numpy as np

from ivri.hormander import delta_on_branch, find_delta_zeros
from ivri.neuron import F_infty, equilibrium_v

# the input that holds a given voltage is increasing, so it can be inverted
for v in (-10.0, 0.0, 10.0):
    print(f"v = {v:6.1f} mV  needs input c = {float(F_infty(v)):9.4f}")
print(f"input 15 holds v = {equilibrium_v(15.0):.6f} mV")

# the determinant is tiny in absolute terms, so look at its sign and scale
v = np.linspace(-15.0, 30.0, 10)
for vi, d in zip(v, delta_on_branch(v)):
    print(f"v = {vi:6.2f}  determinant = {d: .3e}")

# sign changes on a 0.01 mV grid, polished by bisection
print("zeros on (-15, 30):", [round(r, 6) for r in find_delta_zeros(-15.0, 30.0)])
