"""
Deterministic input currents with closed-form running integrals.

An input ``I(t)`` drives the voltage directly in the deterministic model and
appears as the derivative of the noiseless input path ``xi_t = zeta + int_0^t I``
in the stochastic one.  Each class exposes ``__call__``, ``integral(t)`` and
``derivative(t)`` so that callers never need numerical quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["ConstantInput", "PulsingInput", "input_from_dict"]


@dataclass(frozen=True)
class ConstantInput:
    """``I(t) = c``."""

    c: float

    def __call__(self, t):
        return self.c if np.ndim(t) == 0 else np.full(np.shape(t), self.c)

    def integral(self, t):
        return self.c * t

    def derivative(self, t):
        return 0.0 * t

    def to_dict(self):
        return {"type": "constant", "c": self.c}


@dataclass(frozen=True)
class PulsingInput:
    """``I(t) = a (1 + sin(2 pi t / T))``, non-negative with mean ``a``."""

    a: float
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("input period T must be positive")

    def __call__(self, t):
        return self.a * (1.0 + np.sin(2 * math.pi * t / self.T))

    def integral(self, t):
        w = 2 * math.pi / self.T
        return self.a * (t + (1.0 - np.cos(w * t)) / w)

    def derivative(self, t):
        w = 2 * math.pi / self.T
        return self.a * w * np.cos(w * t)

    def to_dict(self):
        return {"type": "pulsing", "a": self.a, "T": self.T}


_INPUTS = {"constant": ConstantInput, "pulsing": PulsingInput}


def input_from_dict(d):
    d = dict(d)
    kind = d.pop("type", "constant")
    if kind not in _INPUTS:
        raise DomainError(f"unknown input type {kind!r}")
    try:
        return _INPUTS[kind](**{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise DomainError(f"bad {kind} input parameters: {exc}") from None
