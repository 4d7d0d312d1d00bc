"""
Determinant criteria for the weak Hormander condition.

For an internal-variable model the bracket recursion ``L_1 = [A_1, A_0]``,
``L_{k+1} = [A_1, L_k]`` produces, up to lower-order terms, the vectors
``sigma^k * d^k/dx_1^k (J_1, ..., J_{m-1})``.  Together with ``A_1`` they span
``R^m`` whenever the matrix of voltage derivatives ``(d^k J_i / dx_1^k)`` is
non-singular; :func:`D_general` evaluates its determinant.

For Hodgkin-Huxley ``F`` is affine in ``v``, so the first row of that
matrix is ``(dF/dv, 0, 0, 0)`` and the criterion reduces to the 3x3
determinant :func:`delta` of derivatives of orders 2..4 of the gate drifts.
"""

from dataclasses import dataclass

import numpy as np

from .jet import jet_var
from .neuron import DEFAULT_PARAMS, GATES, I0, gate_a, gate_b, gate_infty

__all__ = [
    "DeterminantReport",
    "nonzero_tolerance",
    "D_general",
    "delta",
    "delta_on_branch",
    "find_delta_zeros",
    "delta_along",
    "drift_field",
    "diffusion_field",
    "lie_bracket_numeric",
    "L1_formula",
]


@dataclass
class DeterminantReport:
    """Value of a determinant criterion together with its matrix.

    ``value`` and ``nonzero`` are arrays when the report covers a batch of
    points; ``matrix`` then has shape ``(..., d, d)``.
    """

    point: np.ndarray
    value: np.ndarray
    matrix: np.ndarray
    nonzero: np.ndarray


# relative to the Hadamard bound prod_i |row_i| >= |det|; jet entries carry
# ~1e-13 relative error, so determinants below this are indistinguishable from 0
NONZERO_RTOL = 1e-10


def nonzero_tolerance(matrix):
    """Threshold ``NONZERO_RTOL * prod_i |row_i|`` below which a determinant counts as zero.

    Invariant under rescaling any row, unlike an absolute floor: the HH
    entries are of order 1e-4, so their determinants are ~1e-14 in absolute
    terms while being far from singular.
    """
    return NONZERO_RTOL * np.prod(np.linalg.norm(matrix, axis=-1), axis=-1)


def _report(point, matrix):
    value = np.linalg.det(matrix)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("determinant matrix has non-finite entries")
    return DeterminantReport(
        point=point,
        value=value,
        matrix=matrix,
        nonzero=np.abs(value) > nonzero_tolerance(matrix),
    )


def D_general(model, x):
    """Determinant of ``(d^k J_i / dx_1^k)``, rows ``i`` and columns ``k`` in ``1..m-1``.

    Only the first ``m - 1`` coordinates of `x` are used.  `x` may be an
    ``(m,)`` / ``(m-1,)`` vector or an array with the coordinates on axis 0.
    """
    d = model.m - 1
    x = np.asarray(x, dtype=float)
    xs = [jet_var(x[0], d)] + [x[i] for i in range(1, d)]
    rows = model.J(xs)
    mat = np.stack(
        [np.stack([row.derivative(k) * np.ones(x.shape[1:]) for k in range(1, d + 1)], axis=-1) for row in rows],
        axis=-2,
    )
    return _report(x[:d], mat)


def _gate_drift_jets(v, state, order):
    vj = jet_var(v, order)
    return [-gate_a(g, vj) * s + gate_b(g, vj) for g, s in zip(GATES, state)]


def delta(v, n, m, h):
    """3x3 determinant with rows ``d_n, d_m, d_h`` and columns ``d/dv`` orders 2, 3, 4.

    ``d_g(v, x) = -a_g(v) x + b_g(v)``.  Inputs may be broadcastable arrays.
    """
    v, n, m, h = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (v, n, m, h)))
    rows = _gate_drift_jets(v, (n, m, h), 4)
    mat = np.stack(
        [np.stack([row.derivative(k) for k in (2, 3, 4)], axis=-1) for row in rows],
        axis=-2,
    )
    return _report(np.stack([v, n, m, h]), mat)


def delta_on_branch(v):
    """``delta(v, n_inf(v), m_inf(v), h_inf(v))`` (float or array)."""
    v = np.asarray(v, dtype=float)
    val = delta(v, gate_infty("n", v), gate_infty("m", v), gate_infty("h", v)).value
    return float(val) if val.ndim == 0 else val


def _bisect(f, lo, hi, flo, xtol):
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_delta_zeros(v_lo=I0[0], v_hi=I0[1], step=1e-2, xtol=1e-6):
    """Zeros of :func:`delta_on_branch` on ``[v_lo, v_hi]``, ascending.

    Sign changes are located on a grid of spacing `step` and refined by
    bisection to `xtol`.
    """
    if not v_lo < v_hi:
        raise ValueError("need v_lo < v_hi")
    n = max(int(np.ceil((v_hi - v_lo) / step)), 1)
    grid = np.linspace(v_lo, v_hi, n + 1)
    vals = delta_on_branch(grid)
    roots = []
    for i in range(n):
        a, b = vals[i], vals[i + 1]
        if a == 0:
            if not roots or abs(roots[-1] - grid[i]) > xtol:
                roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(float(_bisect(delta_on_branch, grid[i], grid[i + 1], a, xtol)))
    if vals[-1] == 0 and (not roots or abs(roots[-1] - grid[-1]) > xtol):
        roots.append(float(grid[-1]))
    return roots


def delta_along(traj):
    """``(t, delta)`` at every stored state of a trajectory with >= 4 components."""
    s = np.asarray(traj.states)
    if s.ndim != 2 or s.shape[1] < 4:
        raise ValueError("trajectory states need at least four components")
    return np.asarray(traj.times), delta(s[:, 0], s[:, 1], s[:, 2], s[:, 3]).value


# -- Lie brackets -------------------------------------------------------------

def drift_field(model):
    """``A_0 = d/dt + b~`` as a map ``(t, x) -> (1, b~(t, x))``."""

    def A0(p):
        p = np.asarray(p, dtype=float)
        return np.concatenate([[1.0], model.strat_drift(p[0], p[1:])])

    return A0


def diffusion_field(model):
    """``A_1 = sigma`` as a map ``(t, x) -> (0, sigma(x))``."""

    def A1(p):
        p = np.asarray(p, dtype=float)
        return np.concatenate([[0.0], model.diffusion(p[1:])])

    return A1


def _directional(f, p, direction, h):
    norm = np.linalg.norm(direction)
    if norm == 0:
        return np.zeros_like(f(p))
    u = direction / norm
    return (f(p + h * u) - f(p - h * u)) / (2 * h) * norm


def lie_bracket_numeric(field_a, field_b, point, fd_step=None):
    """``[A, B]_i = sum_j A_j dB_i/dp_j - B_j dA_i/dp_j`` by central differences.

    Coordinate 0 of `point` is time.  The default step is
    ``1e-5 * (1 + |point|)``.
    """
    p = np.asarray(point, dtype=float)
    h = 1e-5 * (1.0 + np.linalg.norm(p)) if fd_step is None else fd_step
    if not h > 0:
        raise ValueError("fd_step must be positive")
    return _directional(field_b, p, field_a(p), h) - _directional(field_a, p, field_b(p), h)


def L1_formula(model, x):
    """Components ``2..m-1`` of ``[A_1, A_0]`` from the closed form ``sigma(x_m) dJ_i/dx_1``."""
    x = np.asarray(x, dtype=float)
    xs = [jet_var(x[0], 1)] + [x[i] for i in range(1, model.m - 1)]
    rows = model.J(xs)
    s = model.sigma(x[-1])
    return np.array([s * float(r.derivative(1)) for r in rows[1:]])
