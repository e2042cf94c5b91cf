"""Moving-least-squares engine with polynomial reproduction.

At every evaluation point x the coefficient vector a(x) minimizes
``sum_j a_j**2 / w(x, x_j)`` subject to exact reproduction of the
polynomial space on the nodes.  The minimizer comes from the dual
(Gram) system: with P the collocation matrix and D = diag(w),

    (P' D P) lam = p(x),        a = D P lam.

Weights are normalized per point before factorization (the minimizer is
invariant under uniform weight scaling, the conditioning is not).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from ._setup import (
    as_point_block,
    divergent_snap_radius,
    map_chunks,
    prepare_core,
)
from .basis import eval_basis
from .coefficients import CoefficientVector
from .errors import IllConditionedSystemError, InvalidArgumentError
from .weights import WEIGHT_CEIL, WEIGHT_FLOOR

__all__ = ["MovingLeastSquares", "Shepard", "MlsSweep"]

# points per evaluation chunk; keeps the (chunk, n_nodes) blocks in cache
_CHUNK = 512

# relative pivot floor below which the Gram factorization is rejected
_PIVOT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MlsSweep:
    """Vectorized per-point results of a grid sweep."""

    values: np.ndarray | None
    abs_sums: np.ndarray
    matrix: np.ndarray | None


class MovingLeastSquares(RegressorMixin, BaseEstimator):
    """Quasi-interpolation by weighted-least-squares polynomial reproduction.

    Parameters
    ----------
    degree : int
        Total degree of the reproduced polynomial space.
    weight : str or WeightSpec
        Weight family, e.g. ``"gaussian:nu=1.0"`` or ``"algebraic:k=6.2"``.
    delta_factor : float
        Localization length as a multiple of the fill distance (or the
        separation radius, see ``delta_mode``).
    delta_mode : str
        "fill" or "separation".
    basis : str
        "chebyshev" or "monomial"; affects conditioning only, not the
        fitted approximant.
    domain : Domain or (lower, upper), optional
        Approximation box; defaults to the bounding box of the nodes.
    snap_rel : float
        For weight families that diverge at zero: evaluation points
        within ``snap_rel * scale`` of a node return that node's
        cardinal coefficient vector.

    Attributes
    ----------
    nodes_ : NodeSet
    values_ : ndarray or None
        Node samples when ``fit`` received targets.
    delta_ : float
        Resolved localization length.
    scale_ : float
        Length the weight profile divides distances by.
    """

    def __init__(self, degree=1, weight="gaussian:nu=1.0", delta_factor=5.0,
                 delta_mode="fill", basis="chebyshev", domain=None,
                 snap_rel=1e-12):
        self.degree = degree
        self.weight = weight
        self.delta_factor = delta_factor
        self.delta_mode = delta_mode
        self.basis = basis
        self.domain = domain
        self.snap_rel = snap_rel

    # -- fitting -----------------------------------------------------

    def fit(self, X, y=None):
        """Bind the engine to a node set (and optionally node samples)."""
        core = prepare_core(
            X,
            degree=self.degree,
            weight=self.weight,
            delta_factor=self.delta_factor,
            delta_mode=self.delta_mode,
            basis_family=self.basis,
            domain=self.domain,
        )
        if not core.unisolvent:
            raise IllConditionedSystemError(
                "node set is not unisolvent for the requested degree",
                smallest_pivot=core.unisolvency_pivot,
            )
        self.nodes_ = core.nodes
        self.basis_ = core.basis
        self.collocation_ = core.collocation
        self.weight_ = core.weight
        self.delta_ = core.delta
        self.scale_ = core.scale
        self.snap_radius_ = divergent_snap_radius(core.weight, core.scale, self.snap_rel)
        if y is None:
            self.values_ = None
        else:
            y = np.asarray(y, dtype=float).ravel()
            if y.shape[0] != core.nodes.n:
                raise InvalidArgumentError(
                    f"{y.shape[0]} samples for {core.nodes.n} nodes"
                )
            self.values_ = y
        return self

    def _check_fitted(self):
        if not hasattr(self, "nodes_"):
            raise NotFittedError(
                f"this {type(self).__name__} instance is not fitted yet"
            )

    # -- weights -----------------------------------------------------

    def _raw_weights(self, points: np.ndarray) -> tuple:
        """Clamped weights (m, n) plus the per-row snap target (-1: none)."""
        dist = cdist(points, self.nodes_.points)
        snap_to = np.full(points.shape[0], -1, dtype=int)
        if self.weight_.divergent_at_zero:
            nearest = dist.argmin(axis=1)
            hit = dist[np.arange(dist.shape[0]), nearest] <= self.snap_radius_
            snap_to[hit] = nearest[hit]
            t = dist / self.scale_
            # keep snapped rows out of the divergence; they are overwritten
            t[hit] = np.maximum(t[hit], 1.0)
            w = np.clip(t ** (-self.weight_.shape), WEIGHT_FLOOR, WEIGHT_CEIL)
        else:
            t = dist / self.scale_
            if self.weight_.family == "gaussian":
                w = np.exp(-self.weight_.shape * t * t)
            else:
                w = np.exp(-self.weight_.shape * t)
            w = np.clip(w, WEIGHT_FLOOR, WEIGHT_CEIL)
        return w, snap_to

    # -- coefficient solves -------------------------------------------

    def _solve_chunk(self, points: np.ndarray) -> np.ndarray:
        """Coefficient matrix (m, n) for one chunk of evaluation points."""
        p = self.collocation_
        w, snap_to = self._raw_weights(points)
        wn = w / w.max(axis=1, keepdims=True)
        gram = np.einsum("mn,nk,nl->mkl", wn, p, p, optimize=True)
        rhs = np.atleast_2d(eval_basis(self.basis_, points))
        lam = None
        try:
            chol = np.linalg.cholesky(gram)
            z = np.linalg.solve(chol, rhs[:, :, None])
            lam = np.linalg.solve(np.swapaxes(chol, 1, 2), z)[:, :, 0]
        except np.linalg.LinAlgError:
            pass
        coeff = np.empty((points.shape[0], self.nodes_.n))
        if lam is not None:
            resid = np.abs(np.einsum("mkl,ml->mk", gram, lam) - rhs).max(axis=1)
            bad = ~np.isfinite(resid) | (resid > 1e-9 * (1.0 + np.abs(rhs).max(axis=1)))
            coeff[:] = wn * (lam @ p.T)
        else:
            bad = np.ones(points.shape[0], dtype=bool)
        for i in np.nonzero(bad)[0]:
            coeff[i] = self._solve_stable(wn[i], rhs[i])
        for i in np.nonzero(snap_to >= 0)[0]:
            coeff[i] = 0.0
            coeff[i, snap_to[i]] = 1.0
        return coeff

    def _solve_stable(self, wn: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Orthogonal-factorization fallback for extreme weight ranges.

        Works on B = sqrt(W) P, whose condition number is the square
        root of the Gram system's.
        """
        s = np.sqrt(wn)
        b = s[:, None] * self.collocation_
        q, r = np.linalg.qr(b)
        diag = np.abs(np.diag(r))
        if diag.min() <= _PIVOT_TOL * diag.max():
            raise IllConditionedSystemError(
                "weighted collocation matrix is numerically rank deficient",
                smallest_pivot=float(diag.min()),
            )
        z = scipy.linalg.solve_triangular(r, rhs, trans="T")
        return s * (q @ z)

    # -- public operations ---------------------------------------------

    def coefficients(self, x) -> CoefficientVector:
        """Basis-function values a_j(x) at one evaluation point."""
        self._check_fitted()
        pts = as_point_block(x, self.nodes_.dim)
        if pts.shape[0] != 1:
            raise InvalidArgumentError("coefficients() takes a single point")
        row = self._solve_chunk(pts)[0]
        return CoefficientVector(pts[0], self.nodes_.n, row)

    def coefficient_matrix(self, points) -> np.ndarray:
        """Dense (n_points, n_nodes) matrix of coefficient rows."""
        return self.sweep(points, need_matrix=True).matrix

    def gram_system(self, x) -> tuple:
        """Raw (unnormalized) Gram matrix and right-hand side at a point."""
        self._check_fitted()
        pts = as_point_block(x, self.nodes_.dim)
        w, _ = self._raw_weights(pts)
        p = self.collocation_
        gram = (p.T * w[0]) @ p
        rhs = eval_basis(self.basis_, pts)[0]
        return gram, rhs

    def sweep(self, points, need_matrix=False) -> MlsSweep:
        """Evaluate coefficients over many points, chunked and in order."""
        self._check_fitted()
        pts = as_point_block(points, self.nodes_.dim)
        chunks = [
            pts[i : i + _CHUNK] for i in range(0, pts.shape[0], _CHUNK)
        ] or [pts]
        blocks = map_chunks(self._solve_chunk, chunks)
        abs_sums = np.concatenate([np.abs(b).sum(axis=1) for b in blocks])
        values = None
        if self.values_ is not None:
            values = np.concatenate([b @ self.values_ for b in blocks])
        matrix = np.vstack(blocks) if need_matrix else None
        return MlsSweep(values, abs_sums, matrix)

    def predict(self, X) -> np.ndarray:
        """Evaluate the quasi-interpolant of the fitted samples."""
        self._check_fitted()
        if self.values_ is None:
            raise NotFittedError("fit() was called without node samples")
        return self.sweep(X).values

    def evaluate(self, values, points) -> np.ndarray:
        """Combine an explicit sample vector with the coefficient rows."""
        self._check_fitted()
        values = np.asarray(values, dtype=float).ravel()
        if values.shape[0] != self.nodes_.n:
            raise InvalidArgumentError(
                f"{values.shape[0]} samples for {self.nodes_.n} nodes"
            )
        pts = as_point_block(points, self.nodes_.dim)
        blocks = map_chunks(
            lambda c: self._solve_chunk(c) @ values,
            [pts[i : i + _CHUNK] for i in range(0, pts.shape[0], _CHUNK)] or [pts],
        )
        return np.concatenate(blocks)

    def lebesgue_function(self, points) -> np.ndarray:
        """Sum of absolute coefficients per evaluation point."""
        return self.sweep(points).abs_sums


class Shepard(MovingLeastSquares):
    """Degree-zero special case with the closed-form normalized weights.

    The coefficient vector is ``w / sum(w)``; no linear system is
    solved.  Coefficients are nonnegative and sum to one, so the
    Lebesgue function is identically one.
    """

    def __init__(self, weight="gaussian:nu=1.0", delta_factor=5.0,
                 delta_mode="fill", basis="chebyshev", domain=None,
                 snap_rel=1e-12):
        super().__init__(degree=0, weight=weight, delta_factor=delta_factor,
                         delta_mode=delta_mode, basis=basis, domain=domain,
                         snap_rel=snap_rel)

    def _solve_chunk(self, points: np.ndarray) -> np.ndarray:
        w, snap_to = self._raw_weights(points)
        coeff = w / w.sum(axis=1, keepdims=True)
        for i in np.nonzero(snap_to >= 0)[0]:
            coeff[i] = 0.0
            coeff[i, snap_to[i]] = 1.0
        return coeff
