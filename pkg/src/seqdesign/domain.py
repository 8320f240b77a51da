"""Rectangular input domains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True, eq=False)
class Domain:
    """Axis-aligned box of admissible inputs, one (lower, upper) pair per dimension."""

    lower: np.ndarray
    upper: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Domain):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or upper.ndim != 1 or lower.shape != upper.shape:
            raise ConfigError("domain bounds must be two equal-length vectors")
        if lower.size < 1:
            raise ConfigError("domain needs at least one dimension")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ConfigError("domain bounds must be finite")
        if not np.all(lower < upper):
            raise ConfigError("each lower bound must be strictly below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dims(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @classmethod
    def from_bounds(cls, bounds) -> "Domain":
        """Build from a sequence of (lower, upper) pairs."""
        arr = np.asarray(bounds, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ConfigError("bounds must be a sequence of (lower, upper) pairs")
        return cls(arr[:, 0].copy(), arr[:, 1].copy())

    def bounds(self) -> list[list[float]]:
        return [[float(lo), float(hi)] for lo, hi in zip(self.lower, self.upper)]

    def contains(self, points: np.ndarray, rtol: float = 1e-9) -> bool:
        """True when every row lies inside the box (tiny slack for round-trips)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        slack = rtol * self.widths
        return bool(
            np.all(pts >= self.lower - slack) and np.all(pts <= self.upper + slack)
        )

    def scale01(self, points: np.ndarray) -> np.ndarray:
        """Map points into the unit box."""
        return (np.asarray(points, dtype=float) - self.lower) / self.widths

    def unscale(self, unit_points: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`scale01`."""
        return self.lower + np.asarray(unit_points, dtype=float) * self.widths
