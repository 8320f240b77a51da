"""Output transformations applied before emulation (identity, sqrt, log1p)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TransformationError

#: Fixed preference order used to break ties when selecting a transformation.
TRANSFORMATION_KINDS = ("identity", "sqrt", "log1p")


@dataclass(frozen=True)
class Transformation:
    """Monotone map y = t(z) of the raw simulator output, with exact inverse."""

    kind: str = "identity"

    def __post_init__(self):
        if self.kind not in TRANSFORMATION_KINDS:
            raise TransformationError(
                f"unknown transformation {self.kind!r}; expected one of {TRANSFORMATION_KINDS}"
            )

    def validate_raw(self, z) -> None:
        """Raise if any raw output is outside the transformation's domain."""
        z = np.asarray(z, dtype=float)
        if self.kind == "sqrt" and np.any(z < 0):
            raise TransformationError("sqrt transformation requires z >= 0")
        if self.kind == "log1p" and np.any(z <= -1):
            raise TransformationError("log1p transformation requires z > -1")

    def forward(self, z):
        """y = t(z)."""
        self.validate_raw(z)
        z = np.asarray(z, dtype=float)
        if self.kind == "identity":
            return z.copy()
        if self.kind == "sqrt":
            return np.sqrt(z)
        return np.log1p(z)

    def inverse(self, y):
        """z = t^{-1}(y)."""
        y = np.asarray(y, dtype=float)
        if self.kind == "identity":
            return y.copy()
        if self.kind == "sqrt":
            return y * y
        return np.expm1(y)

    @property
    def preference_index(self) -> int:
        return TRANSFORMATION_KINDS.index(self.kind)


IDENTITY = Transformation("identity")
