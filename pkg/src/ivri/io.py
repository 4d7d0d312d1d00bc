"""
Run configuration and on-disk formats.

CSV files start with a ``# config-hash=<hex>`` comment, then a header row;
floats are written with 17 significant digits so that values round-trip.

Binary trajectory layout (little-endian)::

    bytes 0..3    magic b"IVRI"
    u32           m, number of state components
    u64           count, number of rows
    f64[count, m + 1]  rows (t, x_1, ..., x_m), row-major
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .errors import DomainError
from .neuron import HHParams
from .noise import NoiseSpec

__all__ = [
    "RunConfig",
    "config_hash",
    "write_csv",
    "read_csv",
    "write_trajectory_csv",
    "write_trajectory_binary",
    "read_trajectory_binary",
]

MAGIC = b"IVRI"
_HEAD = struct.Struct("<4sIQ")


@dataclass
class Integrator:
    dt_ode: float = 0.01
    dt_sde: float = 1e-3
    t_transient: float = 150.0

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise DomainError(f"unknown integrator key(s): {sorted(extra)}")
        out = cls(**{k: float(v) for k, v in d.items()})
        if not (out.dt_ode > 0 and out.dt_sde > 0 and out.t_transient >= 0):
            raise DomainError("integrator steps must be positive and t_transient non-negative")
        return out


@dataclass
class RunConfig:
    """Everything a CLI run depends on; parsed from one JSON object."""

    model: HHParams = field(default_factory=HHParams)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    integrator: Integrator = field(default_factory=Integrator)
    seed: int = 0
    out: str = "."
    threads: int = 1

    _KEYS = ("model", "noise", "integrator", "seed", "out", "threads")

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - set(cls._KEYS)
        if extra:
            raise DomainError(f"unknown config key(s): {sorted(extra)}")
        cfg = cls()
        if "model" in d:
            cfg.model = HHParams.from_dict(d["model"])
        if "noise" in d:
            cfg.noise = NoiseSpec.from_dict(d["noise"])
        if "integrator" in d:
            cfg.integrator = Integrator.from_dict(d["integrator"])
        if "seed" in d:
            cfg.seed = _u64(d["seed"])
        if "out" in d:
            cfg.out = str(d["out"])
        if "threads" in d:
            cfg.threads = int(d["threads"])
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise DomainError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "noise": self.noise.to_dict(),
            "integrator": {f.name: getattr(self.integrator, f.name) for f in fields(Integrator)},
            "seed": self.seed,
            "out": self.out,
            "threads": self.threads,
        }


def _u64(x):
    x = int(x)
    if not 0 <= x < 2**64:
        raise DomainError("seed must be an unsigned 64-bit integer")
    return x


def config_hash(obj):
    """SHA-256 (first 16 hex digits) of the canonical JSON form of `obj`."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_csv(path, header, rows, chash):
    """Write a numeric table with the config-hash comment and a header row."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != len(header):
        raise ValueError(f"{len(header)} columns in header, {rows.shape[1]} in data")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config-hash={chash}\n")
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(f"{x:.17g}" for x in r) + "\n")
    return path


def read_csv(path):
    """Return ``(config_hash, header, data)`` of a file written by :func:`write_csv`."""
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# config-hash="):
            raise ValueError(f"{path}: missing config-hash line")
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return first.split("=", 1)[1], header, data


def write_trajectory_csv(path, traj, chash, names=("v", "n", "m", "h", "xi")):
    names = list(names)[: traj.dim]
    return write_csv(path, ["t"] + names, np.column_stack([traj.times, traj.states]), chash)


def write_trajectory_binary(path, traj):
    rows = np.ascontiguousarray(np.column_stack([traj.times, traj.states]), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, traj.dim, len(traj)))
        fh.write(rows.tobytes(order="C"))
    return Path(path)


def read_trajectory_binary(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEAD.size:
        raise ValueError(f"{path}: truncated header")
    magic, m, count = _HEAD.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEAD.size)
    if data.size != count * (m + 1):
        raise ValueError(f"{path}: expected {count * (m + 1)} values, found {data.size}")
    data = data.reshape(count, m + 1)
    return Trajectory(data[:, 0].copy(), data[:, 1:].copy(), {"source": str(path)})
