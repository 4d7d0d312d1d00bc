"""
Mean-reverting input processes carrying a deterministic signal.

The input ``xi`` solves ``dxi = tau (S(t) - xi) dt + gamma q(xi) sqrt(tau) dW``
with ``q = 1`` (Ornstein-Uhlenbeck) or ``q(x) = sqrt((x + K) v 0)``
(Cox-Ingersoll-Ross, shifted so that its state space is ``(-K, inf)``).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "ConstantSignal",
    "SinusoidalSignal",
    "LinearSignal",
    "TrackingSignal",
    "NoiseSpec",
    "signal_from_dict",
]


@dataclass(frozen=True)
class ConstantSignal:
    value: float = 0.0

    def __call__(self, t):
        return self.value if np.ndim(t) == 0 else np.full(np.shape(t), self.value)

    @property
    def sup_abs(self):
        return abs(self.value)

    def to_dict(self):
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class SinusoidalSignal:
    """``offset + amplitude * sin(2 pi t / period + phase)``."""

    offset: float
    amplitude: float
    period: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise DomainError("signal period must be positive")

    def __call__(self, t):
        return self.offset + self.amplitude * np.sin(2 * np.pi * t / self.period + self.phase)

    @property
    def sup_abs(self):
        return abs(self.offset) + abs(self.amplitude)

    def to_dict(self):
        return {
            "type": "sinusoidal",
            "offset": self.offset,
            "amplitude": self.amplitude,
            "period": self.period,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class LinearSignal:
    """``intercept + slope * t``.

    With ``intercept = xi0 + c / tau`` and ``slope = c`` the noiseless input
    is ``xi_t = xi0 + c t``, i.e. a constant current ``c`` into the voltage.
    Unbounded, so only usable with OU input.
    """

    intercept: float
    slope: float

    def __call__(self, t):
        return self.intercept + self.slope * t

    @property
    def sup_abs(self):
        return math.inf if self.slope else abs(self.intercept)

    def to_dict(self):
        return {"type": "linear", "intercept": self.intercept, "slope": self.slope}


@dataclass(frozen=True)
class TrackingSignal:
    """Signal whose noiseless input path is ``xi_t = zeta + int_0^t I``.

    Solving ``xi' = tau (S - xi)`` for ``S`` gives
    ``S(t) = zeta + int_0^t I + I(t) / tau``; the voltage then receives the
    deterministic current ``I`` on top of the noise.  `current` must provide
    ``__call__`` and ``integral`` (see :mod:`ivri.inputs`).
    """

    current: object
    zeta: float
    tau: float

    def __call__(self, t):
        return self.zeta + self.current.integral(t) + self.current(t) / self.tau

    @property
    def sup_abs(self):
        return math.inf

    def to_dict(self):
        return {"type": "tracking", "current": self.current.to_dict(), "zeta": self.zeta, "tau": self.tau}


_SIGNALS = {"constant": ConstantSignal, "sinusoidal": SinusoidalSignal, "linear": LinearSignal}


def signal_from_dict(d):
    d = dict(d)
    kind = d.pop("type", "constant")
    if kind == "tracking":
        from .inputs import input_from_dict

        try:
            return TrackingSignal(input_from_dict(d["current"]), float(d["zeta"]), float(d["tau"]))
        except KeyError as exc:
            raise DomainError(f"tracking signal needs {exc}") from None
    if kind not in _SIGNALS:
        raise DomainError(f"unknown signal type {kind!r}")
    try:
        return _SIGNALS[kind](**{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise DomainError(f"bad {kind} signal parameters: {exc}") from None


@dataclass(frozen=True)
class NoiseSpec:
    """OU or CIR input.

    Parameters
    ----------
    kind : {"ou", "cir"}
    tau : float
        Mean-reversion speed (1/ms).
    gamma : float
        Spread.  ``gamma = 0`` is accepted and gives a noiseless input.
    signal : callable
        ``S(t)``; must expose ``sup_abs`` for CIR.
    K : float
        CIR shift, required to exceed ``gamma**2 / 2 + sup|S|``.
    """

    kind: str = "ou"
    tau: float = 1.0
    gamma: float = 0.5
    signal: object = ConstantSignal(0.0)
    K: float = None

    def __post_init__(self):
        if self.kind not in ("ou", "cir"):
            raise DomainError(f"noise kind must be 'ou' or 'cir', got {self.kind!r}")
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if self.gamma < 0:
            raise DomainError("gamma must be non-negative")
        if self.kind == "cir":
            sup = getattr(self.signal, "sup_abs", None)
            if sup is None:
                raise DomainError("CIR input needs a signal with a known bound (sup_abs)")
            if self.K is None or not self.K > self.gamma**2 / 2 + sup:
                raise DomainError(
                    f"CIR shift K must exceed gamma^2/2 + sup|S| = {self.gamma**2 / 2 + sup:g}"
                )

    @property
    def U(self):
        """Open state interval of the input."""
        return (-math.inf, math.inf) if self.kind == "ou" else (-self.K, math.inf)

    def drift(self, t, x):
        return self.tau * (self.signal(t) - x)

    def sigma(self, x):
        s = self.gamma * math.sqrt(self.tau)
        if self.kind == "ou":
            return s + 0.0 * x
        return s * np.sqrt(np.maximum(x + self.K, 0.0))

    def sigma_prime(self, x):
        if self.kind == "ou":
            return 0.0 * x
        s = self.gamma * math.sqrt(self.tau)
        return 0.5 * s / np.sqrt(np.maximum(x + self.K, 0.0))

    @property
    def xi_scale(self):
        """Typical stationary spread of the input, used to scale distances."""
        if self.kind == "ou":
            return self.gamma / math.sqrt(2.0)
        return self.gamma * math.sqrt(self.K / 2.0)

    def to_dict(self):
        sig = self.signal.to_dict() if hasattr(self.signal, "to_dict") else repr(self.signal)
        return {"kind": self.kind, "tau": self.tau, "gamma": self.gamma, "signal": sig, "K": self.K}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        extra = set(d) - {"kind", "tau", "gamma", "signal", "K"}
        if extra:
            raise DomainError(f"unknown noise key(s): {sorted(extra)}")
        if "signal" in d:
            d["signal"] = signal_from_dict(d["signal"])
        for k in ("tau", "gamma", "K"):
            if d.get(k) is not None:
                d[k] = float(d[k])
        return cls(**d)
