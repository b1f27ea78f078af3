"""Uniform-grid paths and their on-disk formats.

A :class:`GridPath` is the carrier of every sampled signal in the library:
driving noises, slow/fast solution components and averaged solutions.  All
increments are recomputed from node values, never accumulated, so there is no
drift from re-summation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

_MAGIC = b"RAVGPATH"
# magic, version, dim, t0, dt, H (nan if absent), seed; n_steps follows as int64
_HEADER = struct.Struct("<8sIIdddq")
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class HurstIndex:
    """Hurst index restricted to the rough regime (1/3, 1/2]."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (1.0 / 3.0 < v <= 0.5):
            raise ValueError(f"Hurst index must lie in (1/3, 1/2], got {v}")
        object.__setattr__(self, "value", v)

    def __float__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class GridPath:
    """A path sampled on a uniform time grid.

    values has shape (n_steps + 1, dim); node i sits at time t0 + i * dt.
    """

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise ValueError("values must be a (n_steps+1, dim) array")
        if vals.shape[0] < 2 or vals.shape[1] < 1:
            raise ValueError("need n_steps >= 1 and dim >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        vals = np.ascontiguousarray(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def t_end(self) -> float:
        return self.t0 + self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.shape[0])

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Grid index of time t; raises GridError if t is off the grid."""
        x = (float(t) - self.t0) / self.dt
        i = int(round(x))
        if abs(x - i) > tol * max(1.0, abs(x)) + tol:
            raise GridError(f"time {t} is not a node of the grid")
        if not 0 <= i <= self.n_steps:
            raise GridError(f"time {t} lies outside the grid")
        return i

    def value_at(self, t: float) -> np.ndarray:
        return self.values[self.index_of(t)]

    def increment(self, i: int, j: int) -> np.ndarray:
        """Increment x_{t_i, t_j} = values[j] - values[i] (i <= j)."""
        return self.values[j] - self.values[i]

    def increments(self) -> np.ndarray:
        """Per-step increments, shape (n_steps, dim)."""
        return np.diff(self.values, axis=0)

    def restrict(self, s: float, t: float) -> "GridPath":
        i, j = self.index_of(s), self.index_of(t)
        if j <= i:
            raise GridError("need s < t inside the grid")
        return GridPath(self.t0 + i * self.dt, self.dt, self.values[i : j + 1])

    def subsample(self, stride: int) -> "GridPath":
        if stride < 1 or self.n_steps % stride != 0:
            raise GridError(f"stride {stride} does not divide n_steps {self.n_steps}")
        return GridPath(self.t0, self.dt * stride, self.values[::stride])

    def shifted(self, offset: np.ndarray) -> "GridPath":
        return GridPath(self.t0, self.dt, self.values + np.asarray(offset))

    def same_grid(self, other: "GridPath", tol: float = 1e-9) -> bool:
        return (
            self.n_steps == other.n_steps
            and abs(self.t0 - other.t0) <= tol
            and abs(self.dt - other.dt) <= tol * self.dt
        )

    # --- persistence -----------------------------------------------------

    def save(self, path, hurst: float | None = None, seed: int = -1) -> None:
        """Columnar binary format: fixed header, then float64-LE node values."""
        h = float("nan") if hurst is None else float(hurst)
        header = _HEADER.pack(
            _MAGIC, _FORMAT_VERSION, self.dim, self.t0, self.dt, h, int(seed)
        )
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(struct.pack("<q", self.n_steps))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "GridPath":
        with open(path, "rb") as fh:
            raw = fh.read(_HEADER.size)
            if len(raw) < _HEADER.size:
                raise GridError(f"{path} is not a GridPath file")
            magic, version, dim, t0, dt, _h, _seed = _HEADER.unpack(raw)
            if magic != _MAGIC:
                raise GridError(f"{path} is not a GridPath file")
            if version != _FORMAT_VERSION:
                raise GridError(f"unsupported format version {version}")
            (n_steps,) = struct.unpack("<q", fh.read(8))
            data = np.frombuffer(fh.read(), dtype="<f8").reshape(n_steps + 1, dim)
        return cls(t0, dt, data.copy())

    def save_csv(self, path) -> None:
        """CSV with columns t, x_1, ..., x_dim for inspection."""
        header = "t," + ",".join(f"x_{k + 1}" for k in range(self.dim))
        data = np.column_stack([self.times, self.values])
        np.savetxt(path, data, delimiter=",", header=header, comments="")
