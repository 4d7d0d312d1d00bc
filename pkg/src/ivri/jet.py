"""
Univariate truncated Taylor arithmetic.

A :class:`Jet` stores the Taylor coefficients ``c[0..K]`` of a scalar
function about an expansion point, so that the k-th derivative is
``k! * c[k]``.  Coefficients may carry a trailing batch shape, which lets a
single jet evaluate a composite function at many expansion points at once::

    >>> x = jet_var(np.array([0.0, 1.0]), 4)
    >>> jet_exp(x).derivatives()[:, 1]
    array([2.71828183, 2.71828183, 2.71828183, 2.71828183, 2.71828183])

Arithmetic operators are overloaded, and plain floats/arrays are promoted
to constant jets.  The module-level helpers :func:`exp` and
:func:`expm1_ratio` dispatch on their argument so that model code can be
written once and evaluated on floats, arrays or jets.
"""

import math
from fractions import Fraction

import numpy as np
from scipy.special import comb

from .errors import DomainError

__all__ = [
    "MAX_ORDER",
    "SERIES_THRESHOLD",
    "Jet",
    "jet_var",
    "jet_const",
    "jet_add",
    "jet_sub",
    "jet_mul",
    "jet_div",
    "jet_neg",
    "jet_exp",
    "jet_expm1",
    "jet_expm1_ratio",
    "exp",
    "expm1_ratio",
]

MAX_ORDER = 8

# |u| below which u/(e^u - 1) is expanded from its Bernoulli series.  The
# quotient branch loses roughly eps/|u|^k in the k-th coefficient, so the
# switch sits where that loss is still ~1e-13 at order 8.
SERIES_THRESHOLD = 2.0

# Bernoulli terms kept in the series branch (radius of convergence 2*pi); at
# |u| <= 2 the neglected tail is below double precision for every order <= 8.
_N_BERNOULLI = 96


def _bernoulli_over_factorial(n):
    # exact B_j / j! (B_1 = -1/2) from sum_{k<=j} B_k / (k! (j+1-k)!) = [j == 0]
    out = [Fraction(1)]
    for j in range(1, n + 1):
        s = sum(out[k] / math.factorial(j + 1 - k) for k in range(j))
        out.append(-s)
    return np.array([float(b) for b in out])


_BERNOULLI_OVER_FACT = _bernoulli_over_factorial(_N_BERNOULLI)


class Jet:
    """Truncated Taylor expansion ``c0 + c1*h + ... + cK*h**K``.

    Parameters
    ----------
    coeffs : array_like, shape (order + 1, ...)
        Taylor coefficients about the expansion point.  Trailing axes are a
        batch of independent expansion points.
    """

    __slots__ = ("coeffs",)
    # make ndarray <op> Jet defer to the reflected Jet method
    __array_ufunc__ = None

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 0 or c.shape[0] < 1:
            raise ValueError("a jet needs at least one coefficient")
        if c.shape[0] - 1 > MAX_ORDER:
            raise ValueError(f"jet order {c.shape[0] - 1} exceeds {MAX_ORDER}")
        if not np.all(np.isfinite(c)):
            raise ValueError("jet coefficients must be finite")
        self.coeffs = c

    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    @property
    def value(self):
        return self.coeffs[0]

    def derivatives(self):
        """Derivatives of order 0..K, i.e. ``k! * c[k]``."""
        fact = np.array([math.factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.coeffs * fact.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))

    def derivative(self, k):
        return math.factorial(k) * self.coeffs[k]

    def __repr__(self):
        return f"Jet(order={self.order}, coeffs={self.coeffs!r})"

    def _lift(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError(f"jet orders differ: {self.order} vs {other.order}")
            return other
        return jet_const(other, self.order)

    def __add__(self, other):
        return jet_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return jet_sub(self, other)

    def __rsub__(self, other):
        return jet_sub(self._lift(other), self)

    def __mul__(self, other):
        return jet_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return jet_div(self, other)

    def __rtruediv__(self, other):
        return jet_div(self._lift(other), self)

    def __neg__(self):
        return jet_neg(self)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)) or n < 0:
            return NotImplemented
        out = jet_const(np.ones_like(self.coeffs[0]), self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def exp(self):
        return jet_exp(self)


def jet_var(x0, order):
    """Seed jet of the identity function expanded at `x0`."""
    if order < 0 or order > MAX_ORDER:
        raise ValueError(f"order must lie in 0..{MAX_ORDER}")
    x0 = np.asarray(x0, dtype=float)
    c = np.zeros((order + 1,) + x0.shape)
    c[0] = x0
    if order >= 1:
        c[1] = 1.0
    return Jet(c)


def jet_const(value, order):
    """Jet of a constant function."""
    value = np.asarray(value, dtype=float)
    c = np.zeros((order + 1,) + value.shape)
    c[0] = value
    return Jet(c)


def _pair(a, b):
    if isinstance(a, Jet):
        return a, a._lift(b)
    return b._lift(a), b


def _pad(c, ndim):
    # batch axes align on the right, behind the coefficient axis
    return c.reshape(c.shape[:1] + (1,) * (ndim - c.ndim) + c.shape[1:])


def _bcast(a, b):
    nd = max(a.coeffs.ndim, b.coeffs.ndim)
    return np.broadcast_arrays(_pad(a.coeffs, nd), _pad(b.coeffs, nd))


def jet_add(a, b):
    if not isinstance(b, Jet):
        b = np.asarray(b, dtype=float)
        batch = np.broadcast_shapes(a.coeffs.shape[1:], b.shape)
        c = np.broadcast_to(_pad(a.coeffs, len(batch) + 1), a.coeffs.shape[:1] + batch).copy()
        c[0] += b
        return Jet(c)
    a, b = _pair(a, b)
    ca, cb = _bcast(a, b)
    return Jet(ca + cb)


def jet_sub(a, b):
    if not isinstance(b, Jet):
        return jet_add(a, -np.asarray(b, dtype=float))
    a, b = _pair(a, b)
    ca, cb = _bcast(a, b)
    return Jet(ca - cb)


def jet_neg(a):
    return Jet(-a.coeffs)


def jet_mul(a, b):
    """Cauchy product truncated at the common order."""
    if not isinstance(b, Jet):
        b = np.asarray(b, dtype=float)
        return Jet(_pad(a.coeffs, b.ndim + 1) * b)
    a, b = _pair(a, b)
    ca, cb = _bcast(a, b)
    K = ca.shape[0] - 1
    out = np.empty_like(ca)
    for k in range(K + 1):
        out[k] = np.sum(ca[: k + 1] * cb[k::-1], axis=0)
    return Jet(out)


def jet_div(a, b):
    """Quotient ``a / b``; raises :class:`DomainError` if ``b`` vanishes."""
    if not isinstance(b, Jet):
        b = np.asarray(b, dtype=float)
        if np.any(b == 0):
            raise DomainError("division by a jet with zero constant term")
        return Jet(_pad(a.coeffs, b.ndim + 1) / b)
    a, b = _pair(a, b)
    ca, cb = _bcast(a, b)
    if np.any(cb[0] == 0):
        raise DomainError("division by a jet with zero constant term")
    K = ca.shape[0] - 1
    q = np.empty_like(ca)
    for k in range(K + 1):
        acc = ca[k] - np.sum(q[:k] * cb[k:0:-1], axis=0) if k else ca[0]
        q[k] = acc / cb[0]
    return Jet(q)


def _exp_recurrence(a, c0):
    K = a.shape[0] - 1
    e = np.empty_like(a)
    e[0] = c0
    e0 = np.exp(a[0])
    # derivatives of expm1 and exp coincide; run the recurrence on exp
    full = np.empty_like(a)
    full[0] = e0
    j = np.arange(1, K + 1).reshape((-1,) + (1,) * (a.ndim - 1))
    for k in range(1, K + 1):
        full[k] = np.sum(j[:k] * a[1 : k + 1] * full[k - 1 :: -1][:k], axis=0) / k
    e[1:] = full[1:]
    return e


def jet_exp(a):
    return Jet(_exp_recurrence(a.coeffs, np.exp(a.coeffs[0])))


def jet_expm1(a):
    """``exp(a) - 1`` with the constant term from ``expm1`` (no cancellation)."""
    return Jet(_exp_recurrence(a.coeffs, np.expm1(a.coeffs[0])))


def _expm1_ratio_taylor(u0, K):
    """Taylor coefficients of g(w) = w / (e^w - 1) about w = u0, orders 0..K."""
    u0 = np.asarray(u0, dtype=float)
    small = np.abs(u0) < SERIES_THRESHOLD
    out = np.empty((K + 1,) + u0.shape)

    # series branch: g_k(u0) = sum_j C(j, k) B_j / j! * u0^(j - k)
    us = np.where(small, u0, 0.0)
    J = _N_BERNOULLI + 1
    powers = us[None, ...] ** np.arange(J).reshape((-1,) + (1,) * u0.ndim)
    for k in range(K + 1):
        j = np.arange(k, J)
        w = (comb(j, k) * _BERNOULLI_OVER_FACT[k:J]).reshape((-1,) + (1,) * u0.ndim)
        out[k] = np.sum(w * powers[: J - k], axis=0)

    if not np.all(small):
        ul = np.where(small, 1.0, u0)
        num = np.zeros((K + 1,) + u0.shape)
        num[0] = ul
        if K >= 1:
            num[1] = 1.0
        den = _exp_recurrence(num, np.expm1(ul))
        q = jet_div(Jet(num), Jet(den)).coeffs
        out = np.where(small, out, q)
    return out


def jet_expm1_ratio(u):
    """Jet of ``g(u) = u / (e^u - 1)``, smooth through the removable point u = 0.

    Near ``u = 0`` (``|u| < SERIES_THRESHOLD``) the Taylor coefficients of
    ``g`` come from its Bernoulli series; elsewhere from the quotient
    ``u / expm1(u)``.  Either way they are composed with ``u - u(0)``.
    """
    K = u.order
    g = _expm1_ratio_taylor(u.coeffs[0], K)
    delta = u.coeffs.copy()
    delta[0] = 0.0
    delta = Jet(delta)
    out = jet_const(g[K], K)
    for k in range(K - 1, -1, -1):
        out = out * delta + g[k]
    return out


def exp(x):
    """Exponential of a float, array or :class:`Jet`."""
    if isinstance(x, Jet):
        return jet_exp(x)
    if isinstance(x, float):
        return math.exp(x)
    return np.exp(x)


def expm1_ratio(u):
    """``u / (e^u - 1)`` for floats, arrays or jets, equal to 1 at u = 0."""
    if isinstance(u, Jet):
        return jet_expm1_ratio(u)
    if isinstance(u, float):
        if abs(u) < 1e-5:
            return 1.0 - u / 2.0 + u * u / 12.0
        return u / math.expm1(u)
    u = np.asarray(u, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = u / np.expm1(u)
    small = np.abs(u) < 1e-5
    if np.any(small):
        us = u[small]
        out[small] = 1.0 - us / 2.0 + us * us / 12.0
    return out
