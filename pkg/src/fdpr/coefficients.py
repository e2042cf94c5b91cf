"""Coefficient vectors returned by the engines at a single evaluation point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CoefficientVector"]


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Basis-function values a_j(x) at one evaluation point.

    Dense engines fill ``values`` for every node (``indices`` is None);
    the one-norm engine stores only its support, at most one entry per
    reproduction constraint.
    """

    point: np.ndarray
    n_nodes: int
    values: np.ndarray
    indices: np.ndarray | None = None

    def dense(self) -> np.ndarray:
        if self.indices is None:
            return np.asarray(self.values, dtype=float)
        out = np.zeros(self.n_nodes)
        out[self.indices] = self.values
        return out

    @property
    def abs_sum(self) -> float:
        return float(np.abs(self.values).sum())

    @property
    def nonzeros(self) -> int:
        return int(np.count_nonzero(np.abs(self.values) > 0.0))

    def apply(self, samples: np.ndarray) -> float:
        """Combine node samples with the coefficients: sum_j f(x_j) a_j."""
        samples = np.asarray(samples, dtype=float)
        if self.indices is None:
            return float(samples @ self.values)
        return float(samples[self.indices] @ self.values)
