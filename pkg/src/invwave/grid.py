"""Uniform truncation grid on [-L, L] and the finite-difference stencils used on it."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import PreconditionError


@dataclass(frozen=True)
class Grid:
    L: float
    n: int

    def __post_init__(self):
        if not self.L > 0:
            raise PreconditionError("grid half-width L must be > 0")
        if self.n < 4 or self.n % 2:
            raise PreconditionError(f"n must be even and >= 4, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @cached_property
    def xi(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n + 1)

    @property
    def center(self) -> int:
        return self.n // 2


def d1(y: np.ndarray, h: float) -> np.ndarray:
    """Second-order central first derivative on interior nodes (length n-1)."""
    return (y[2:] - y[:-2]) / (2.0 * h)


def d2(y: np.ndarray, h: float) -> np.ndarray:
    """Second-order central second derivative on interior nodes (length n-1)."""
    return (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)


def d1_4(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central first derivative on nodes 2..n-2 (length n-3)."""
    return (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * h)


def d2_4(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central second derivative on nodes 2..n-2 (length n-3)."""
    return (-y[4:] + 16.0 * y[3:-1] - 30.0 * y[2:-2] + 16.0 * y[1:-3] - y[:-4]) / (12.0 * h * h)
