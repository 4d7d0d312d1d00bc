"""
Hodgkin-Huxley coefficients and the internal-variable model description.

Units are millivolts and milliseconds.  The voltage convention puts the
resting potential near 0 mV (``E_K = -12``, ``E_Na = 120``, ``E_L = 10.6``).

Every rate function accepts a float, a numpy array or a :class:`~ivri.jet.Jet`
in the voltage, so the same table feeds simulation (floats/arrays) and the
derivative columns of the Hormander determinants (jets).  The two quotient
rates ``alpha_n`` and ``alpha_m`` have removable singularities at 10 and
25 mV; both are rewritten through ``g(u) = u / (e^u - 1)``.
"""

from dataclasses import dataclass, field, fields
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NumericError
from .jet import exp, expm1_ratio, jet_var

GATES = ("n", "m", "h")

# monotonicity window of F_inf used for the input -> voltage bijection
I0 = (-15.0, 30.0)


@dataclass(frozen=True)
class HHParams:
    """Maximal conductances (mS/cm^2) and reversal potentials (mV)."""

    g_k: float = 36.0
    g_na: float = 120.0
    g_l: float = 0.3
    e_k: float = -12.0
    e_na: float = 120.0
    e_l: float = 10.6

    def __post_init__(self):
        for name in ("g_k", "g_na", "g_l"):
            if not getattr(self, name) > 0:
                raise DomainError(f"conductance {name} must be positive")

    @classmethod
    def from_dict(cls, d):
        """Build from a JSON config block; unknown keys are rejected."""
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise DomainError(f"unknown model parameter(s): {sorted(extra)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_PARAMS = HHParams()


# -- rate table -------------------------------------------------------------

def alpha_n(v):
    return 0.1 * expm1_ratio(1.0 - 0.1 * v)


def beta_n(v):
    return 0.125 * exp(-v / 80.0)


def alpha_m(v):
    return expm1_ratio(2.5 - 0.1 * v)


def beta_m(v):
    return 4.0 * exp(-v / 18.0)


def alpha_h(v):
    return 0.07 * exp(-v / 20.0)


def beta_h(v):
    return 1.0 / (exp(3.0 - 0.1 * v) + 1.0)


RATES = {
    "n": (alpha_n, beta_n),
    "m": (alpha_m, beta_m),
    "h": (alpha_h, beta_h),
}


def _check_gate(gate):
    if gate not in RATES:
        raise ValueError(f"unknown gate {gate!r}; expected one of {GATES}")


def rate(gate, v):
    """Opening and closing rates ``(alpha, beta)`` of `gate` at voltage `v`."""
    _check_gate(gate)
    a, b = RATES[gate]
    return a(v), b(v)


def rate_jet(gate, v, order):
    """Jets of ``(alpha, beta)`` in the voltage, expanded at `v`."""
    return rate(gate, jet_var(v, order))


def gate_a(gate, v):
    """Relaxation rate ``a = alpha + beta`` of the linear gate equation."""
    al, be = rate(gate, v)
    return al + be


def gate_b(gate, v):
    """Source term ``b = alpha`` of the linear gate equation."""
    _check_gate(gate)
    return RATES[gate][0](v)


def gate_infty(gate, v):
    """Steady-state open probability ``alpha / (alpha + beta)`` at fixed `v`."""
    al, be = rate(gate, v)
    return al / (al + be)


def gate_drift(gate, v, x):
    """Right-hand side ``-a(v) x + b(v)`` of the gate equation."""
    al, be = rate(gate, v)
    return al * (1.0 - x) - be * x


# -- membrane current -------------------------------------------------------

def F(v, n, m, h, params=DEFAULT_PARAMS):
    """Voltage drift without input: minus the sum of the ionic currents."""
    p = params
    n2 = n * n
    return -(
        p.g_k * n2 * n2 * (v - p.e_k)
        + p.g_na * m**3 * h * (v - p.e_na)
        + p.g_l * (v - p.e_l)
    )


def dF_dv(n, m, h, params=DEFAULT_PARAMS):
    p = params
    return -(p.g_k * n**4 + p.g_na * m**3 * h + p.g_l)


def F_infty(v, params=DEFAULT_PARAMS):
    """Constant input that makes ``(v, n_inf(v), m_inf(v), h_inf(v))`` an equilibrium.

    Equals ``-F`` on the equilibrium branch, so ``F_infty(v_c) = c`` and the
    map is increasing on ``I0``.
    """
    return -F(v, gate_infty("n", v), gate_infty("m", v), gate_infty("h", v), params)


def equilibrium_v(c, params=DEFAULT_PARAMS, tol=1e-10, max_iter=200):
    """Voltage ``v_c`` of the equilibrium under constant input `c`.

    Bisection on ``I0 = (-15, 30)`` brackets the root of ``F_infty(v) - c``;
    Newton steps with the jet derivative then polish it to ``|residual| <= tol``.

    Raises
    ------
    DomainError
        If `c` is outside ``(F_infty(-15), F_infty(30))``.
    """
    lo, hi = I0
    c_lo, c_hi = F_infty(lo, params), F_infty(hi, params)
    if not c_lo < c < c_hi:
        raise DomainError(
            f"input c={c!r} outside the admissible interval ({c_lo:.6g}, {c_hi:.6g}) "
            f"= F_infty({lo:g}, {hi:g})"
        )
    it = 0
    while hi - lo > 1e-3 and it < max_iter:
        mid = 0.5 * (lo + hi)
        if F_infty(mid, params) < c:
            lo = mid
        else:
            hi = mid
        it += 1
    v = 0.5 * (lo + hi)
    while it < max_iter:
        j = F_infty(jet_var(v, 1), params)
        r = float(j.coeffs[0]) - c
        if abs(r) <= tol:
            return v
        step = r / float(j.coeffs[1])
        v_new = v - step
        if not lo <= v_new <= hi:
            # keep Newton inside the bracket
            if r < 0:
                lo = v
            else:
                hi = v
            v_new = 0.5 * (lo + hi)
        v = v_new
        it += 1
    r = F_infty(v, params) - c
    if abs(r) <= tol:
        return v
    raise NumericError(f"equilibrium_v did not converge (residual {r:.3g})")


def equilibrium_state(c, params=DEFAULT_PARAMS):
    """Equilibrium ``(v_c, n_inf, m_inf, h_inf)`` of the 4D system under input `c`."""
    v = equilibrium_v(c, params)
    return np.array([v, gate_infty("n", v), gate_infty("m", v), gate_infty("h", v)])


def rhs_deterministic(t, state, inp=0.0, params=DEFAULT_PARAMS):
    """Right-hand side of the 4D Hodgkin-Huxley system with input current.

    `inp` is either a constant ``c`` or a callable ``I(t)``.
    """
    v, n, m, h = state
    c = inp(t) if callable(inp) else inp
    an, bn = alpha_n(v), beta_n(v)
    am, bm = alpha_m(v), beta_m(v)
    ah, bh = alpha_h(v), beta_h(v)
    return np.array(
        [
            F(v, n, m, h, params) + c,
            an * (1.0 - n) - bn * n,
            am * (1.0 - m) - bm * m,
            ah * (1.0 - h) - bh * h,
        ]
    )


# -- general internal-variable model ---------------------------------------

@dataclass(frozen=True)
class IvriModel:
    """SDE with internal variables and random input.

    State ``x = (x_1, ..., x_m)``: a global variable ``x_1``, internal
    variables ``x_2..x_{m-1}`` with linear dynamics ``-a_i(x_1) x_i + b_i(x_1)``,
    and an autonomous scalar input ``x_m`` whose increment is added to
    ``x_1``::

        dx_1 = F(x_1..x_{m-1}) dt + dx_m
        dx_i = (-a_i(x_1) x_i + b_i(x_1)) dt
        dx_m = b_m(t, x_m) dt + sigma(x_m) dW

    All coordinate functions accept floats, arrays and (in ``x_1``) jets.
    States may be ``(m,)`` vectors or ``(m, n_paths)`` arrays.
    """

    m: int
    F: Callable
    a: Sequence[Callable]
    b: Sequence[Callable]
    b_m: Callable
    sigma: Callable
    sigma_prime: Callable
    U: tuple = (-np.inf, np.inf)
    name: str = "ivri"
    gate_names: tuple = ()
    noise: object = field(default=None, compare=False)
    # optional fast path: x_1 -> [(a_i, b_i), ...] sharing work between a_i and b_i
    rates: Callable = field(default=None, compare=False)

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("an internal-variable model needs m >= 3")
        if len(self.a) != self.m - 2 or len(self.b) != self.m - 2:
            raise ValueError(f"expected {self.m - 2} gate coefficient pairs")

    def in_U(self, xm):
        lo, hi = self.U
        return np.logical_and(np.asarray(xm) > lo, np.asarray(xm) < hi)

    def J(self, x):
        """Drift components ``J_1 = F`` and ``J_i = -a_i x_i + b_i`` (length m-1)."""
        x1 = x[0]
        out = [self.F(x[: self.m - 1])]
        if self.rates is not None:
            pairs = self.rates(x1)
        else:
            pairs = [(a(x1), b(x1)) for a, b in zip(self.a, self.b)]
        for i, (ai, bi) in enumerate(pairs, start=1):
            out.append(-ai * x[i] + bi)
        return out

    def drift(self, t, x):
        """Ito drift of the full m-dimensional system."""
        x = np.asarray(x, dtype=float)
        J = self.J(x)
        bm = self.b_m(t, x[-1])
        return np.array([J[0] + bm, *J[1:], bm])

    def diffusion(self, x):
        x = np.asarray(x, dtype=float)
        s = self.sigma(x[-1])
        z = np.zeros_like(x)
        z[0] = s
        z[-1] = s
        return z

    def strat_drift(self, t, x):
        """Stratonovich drift ``b_i - 1/2 sum_k sigma_k d sigma_i / d x_k``.

        Only ``x_m`` enters ``sigma``, so the correction ``sigma sigma'/2``
        hits the first and last components.
        """
        x = np.asarray(x, dtype=float)
        d = self.drift(t, x)
        corr = 0.5 * self.sigma(x[-1]) * self.sigma_prime(x[-1])
        d[0] -= corr
        d[-1] -= corr
        return d


def hh_model(params=DEFAULT_PARAMS, noise=None):
    """The 5D stochastic Hodgkin-Huxley system ``(v, n, m, h, xi)``."""
    from .noise import NoiseSpec

    if noise is None:
        noise = NoiseSpec()

    def F_hh(x):
        return F(x[0], x[1], x[2], x[3], params)

    def rates_hh(v):
        out = []
        for g in GATES:
            al, be = rate(g, v)
            out.append((al + be, al))
        return out

    gates = tuple(GATES)
    return IvriModel(
        m=5,
        F=F_hh,
        a=tuple((lambda v, g=g: gate_a(g, v)) for g in gates),
        b=tuple((lambda v, g=g: gate_b(g, v)) for g in gates),
        b_m=noise.drift,
        sigma=noise.sigma,
        sigma_prime=noise.sigma_prime,
        U=noise.U,
        name="hodgkin-huxley",
        gate_names=gates,
        noise=noise,
        rates=rates_hh,
    )
