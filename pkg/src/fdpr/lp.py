"""One-norm quasi-interpolation engine.

At each evaluation point x the coefficient vector solves

    min  sum_i |a_i| / w(x, x_i)   s.t.   P' a = p(x),

rewritten in standard form by splitting a into positive and negative
parts: ``c = (1/w, 1/w)``, ``A = [P', -P']``, ``b = p(x)``.  Optimal
vertices carry at most as many nonzeros as there are reproduction
constraints.  Three solve strategies share the same optimum: cold
two-phase simplex, a warm start that reuses the neighboring point's
basis, and column generation over a growing active set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from ._setup import (
    as_point_block,
    divergent_snap_radius,
    map_chunks,
    prepare_core,
    worker_count,
)
from .basis import eval_basis
from .coefficients import CoefficientVector
from .errors import (
    InfeasibleConstructionError,
    InvalidArgumentError,
    NumericalFailureError,
)
from .simplex import RevisedSimplex, SimplexOptions, SimplexResult
from .weights import WEIGHT_CEIL, WEIGHT_FLOOR, phi

__all__ = ["L1QuasiInterpolant", "LpSolution", "LpState", "LpSweep"]

_CHUNK = 512

STRATEGIES = ("cold", "warm", "colgen")


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Optimal vertex at one evaluation point."""

    coefficients: CoefficientVector
    objective: float
    basis: np.ndarray
    dual: np.ndarray
    iterations: int
    strategy: str
    status: str = "optimal"

    @property
    def nonzeros(self) -> int:
        return self.coefficients.nonzeros


@dataclass
class LpState:
    """Warm-start carrier across consecutive evaluation points."""

    basis: np.ndarray | None = None
    active: np.ndarray | None = None
    last_point: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class LpSweep:
    """Per-point results of a grid sweep."""

    values: np.ndarray | None
    abs_sums: np.ndarray
    nonzeros: np.ndarray
    objectives: np.ndarray
    iterations: int
    failures: tuple
    matrix: np.ndarray | None


class L1QuasiInterpolant(RegressorMixin, BaseEstimator):
    """Quasi-interpolation by weighted one-norm minimization.

    Parameters match :class:`~fdpr.mls.MovingLeastSquares`, plus

    strategy : str
        "cold" (two-phase simplex per point), "warm" (reuse the previous
        point's basis; falls back to dual simplex or a cold start), or
        "colgen" (column generation over nearest-node subsets).
    """

    def __init__(self, degree=1, weight="gaussian:nu=1.0", delta_factor=5.0,
                 delta_mode="fill", basis="chebyshev", domain=None,
                 snap_rel=1e-12, strategy="warm"):
        self.degree = degree
        self.weight = weight
        self.delta_factor = delta_factor
        self.delta_mode = delta_mode
        self.basis = basis
        self.domain = domain
        self.snap_rel = snap_rel
        self.strategy = strategy

    # -- fitting -----------------------------------------------------

    def fit(self, X, y=None):
        if self.strategy not in STRATEGIES:
            raise InvalidArgumentError(f"unknown strategy {self.strategy!r}")
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
            raise InfeasibleConstructionError(
                "node set cannot reproduce the requested polynomial space"
            )
        self.nodes_ = core.nodes
        self.basis_ = core.basis
        self.collocation_ = core.collocation
        self.weight_ = core.weight
        self.delta_ = core.delta
        self.scale_ = core.scale
        self.snap_radius_ = divergent_snap_radius(core.weight, core.scale, self.snap_rel)
        pt = core.collocation.T  # (size, n)
        self.constraints_ = np.hstack([pt, -pt])
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

    # -- per-point problem data ----------------------------------------

    def _distances(self, points: np.ndarray) -> np.ndarray:
        return cdist(points, self.nodes_.points)

    def _snap_target(self, dist_row: np.ndarray) -> int:
        if self.snap_radius_ <= 0.0:
            return -1
        j = int(dist_row.argmin())
        return j if dist_row[j] <= self.snap_radius_ else -1

    def build_lp(self, x, dist_row: np.ndarray | None = None) -> tuple:
        """Standard-form data (cost, constraint matrix, rhs) at a point.

        The cost vector is the reciprocal clamped weight, duplicated for
        the split variables and normalized so its smallest entry is one
        (the minimizer is unchanged; tolerances become meaningful).  The
        normalization factor is returned so objectives can be reported
        in original units.
        """
        self._check_fitted()
        pts = as_point_block(x, self.nodes_.dim)
        if dist_row is None:
            dist_row = self._distances(pts)[0]
        t = dist_row / self.scale_
        if self.weight_.divergent_at_zero and t.min() <= 0.0:
            raise InfeasibleConstructionError(
                "evaluation point coincides with a node; the snap rule applies"
            )
        w = np.asarray(phi(self.weight_, t))
        cw = np.clip(1.0 / w, 1.0 / WEIGHT_CEIL, 1.0 / WEIGHT_FLOOR)
        norm = cw.min()
        cost = np.concatenate([cw, cw]) / norm
        rhs = eval_basis(self.basis_, pts)[0]
        return cost, self.constraints_, rhs, norm

    # -- strategies ------------------------------------------------------

    def _solve_point(self, point: np.ndarray, dist_row: np.ndarray,
                     state: LpState, options: SimplexOptions) -> LpSolution:
        snap = self._snap_target(dist_row)
        if snap >= 0:
            vec = CoefficientVector(point, self.nodes_.n,
                                    np.array([1.0]), np.array([snap]))
            w_at = float(np.asarray(phi(self.weight_, max(dist_row[snap], 1e-320) / self.scale_)))
            return LpSolution(vec, 1.0 / w_at, np.empty(0, dtype=int),
                              np.empty(0), 0, self.strategy, status="snapped")
        cost, amat, rhs, norm = self.build_lp(point, dist_row)
        if self.strategy == "cold":
            res = RevisedSimplex(cost, amat, rhs, options).solve()
        elif self.strategy == "warm":
            res = self._warm_solve(cost, amat, rhs, state, options)
        else:
            res = self._colgen_solve(cost, amat, rhs, dist_row, state, options)
        state.basis = res.basis.copy()
        state.last_point = point
        return self._package(point, res, norm)

    def _warm_solve(self, cost, amat, rhs, state: LpState,
                    options: SimplexOptions) -> SimplexResult:
        solver = RevisedSimplex(cost, amat, rhs, options)
        if state.basis is not None:
            loaded = solver.basis_state(state.basis)
            if loaded is not None:
                binv, xb = loaded
                try:
                    if xb.min() >= -options.feasibility_tol:
                        return solver.resume_primal(state.basis)
                    reduced = cost - (cost[state.basis] @ binv) @ amat
                    if reduced.min() >= -options.optimality_tol:
                        return solver.resume_dual(state.basis)
                except (NumericalFailureError, InfeasibleConstructionError):
                    pass
        return solver.solve()

    def _colgen_solve(self, cost, amat, rhs, dist_row, state: LpState,
                      options: SimplexOptions) -> SimplexResult:
        n = self.nodes_.n
        size = self.basis_.size
        order = np.argsort(dist_row, kind="stable")
        seed_nodes = order[:size]
        active = np.union1d(seed_nodes, seed_nodes + n)
        if state.active is not None:
            active = np.union1d(active, state.active)
        active = active.astype(int)
        local_basis = None
        if state.basis is not None:
            pos = {g: i for i, g in enumerate(active)}
            if all(g in pos for g in state.basis):
                local_basis = np.array([pos[g] for g in state.basis])
        iterations = 0
        for _ in range(2 * n + 1):
            sub = RevisedSimplex(cost[active], amat[:, active], rhs, options)
            res = None
            if local_basis is not None:
                loaded = sub.basis_state(local_basis)
                if loaded is not None and loaded[1].min() >= -options.feasibility_tol:
                    try:
                        res = sub.resume_primal(local_basis)
                    except (NumericalFailureError, InfeasibleConstructionError):
                        res = None
            if res is None:
                try:
                    res = sub.solve()
                except (NumericalFailureError, InfeasibleConstructionError):
                    grown = self._rank_complete(active, order, n)
                    if grown.size == active.size:
                        raise
                    active = grown
                    local_basis = None
                    continue
            iterations += res.iterations
            gains = res.dual @ self.collocation_.T  # (n,)
            viol = np.concatenate([gains, -gains]) - cost
            viol[active] = -np.inf
            enter = int(np.argmax(viol))
            if viol[enter] <= options.optimality_tol:
                full = np.zeros(cost.size)
                full[active] = res.x
                state.active = active
                return SimplexResult(full, res.objective, active[res.basis],
                                     res.dual, iterations)
            local_basis = res.basis
            active = np.append(active, enter)
        raise NumericalFailureError("column generation failed to close the gap")

    def _rank_complete(self, active: np.ndarray, order: np.ndarray, n: int) -> np.ndarray:
        """Grow the active set with nearest nodes until full constraint rank."""
        rows = []
        chosen = []
        rank = 0
        for node in order:
            rows.append(self.collocation_[node])
            if np.linalg.matrix_rank(np.array(rows), tol=1e-12) > rank:
                rank += 1
                chosen.append(node)
            else:
                rows.pop()
            if rank == self.basis_.size:
                break
        chosen = np.array(chosen, dtype=int)
        return np.union1d(active, np.concatenate([chosen, chosen + n])).astype(int)

    def _package(self, point, res: SimplexResult, norm: float) -> LpSolution:
        n = self.nodes_.n
        nodes_idx = []
        vals = []
        for col, val in zip(res.basis, res.x[res.basis]):
            node = int(col % n)
            signed = float(val if col < n else -val)
            nodes_idx.append(node)
            vals.append(signed)
        order = np.argsort(nodes_idx, kind="stable")
        vec = CoefficientVector(
            np.asarray(point, dtype=float),
            n,
            np.asarray(vals)[order],
            np.asarray(nodes_idx, dtype=int)[order],
        )
        return LpSolution(vec, res.objective * norm, res.basis, res.dual,
                          res.iterations, self.strategy)

    # -- public operations ---------------------------------------------

    def solve(self, x, state: LpState | None = None,
              options: SimplexOptions | None = None) -> LpSolution:
        """Full solver detail (vertex, basis, dual, pivot count) at a point."""
        self._check_fitted()
        pts = as_point_block(x, self.nodes_.dim)
        if pts.shape[0] != 1:
            raise InvalidArgumentError("solve() takes a single point")
        state = state if state is not None else LpState()
        return self._solve_point(pts[0], self._distances(pts)[0], state,
                                 options or SimplexOptions())

    def coefficients(self, x) -> CoefficientVector:
        """Sparse basis-function values a_j(x) at one evaluation point."""
        return self.solve(x).coefficients

    def sweep(self, points, need_matrix=False,
              options: SimplexOptions | None = None) -> LpSweep:
        """Solve along a sequence of points, threading warm-start state.

        Points are processed in the order given (grids should come
        row-major so neighbors stay adjacent).  Failed points are
        recorded and skipped; their entries are NaN.
        """
        self._check_fitted()
        pts = as_point_block(points, self.nodes_.dim)
        options = options or SimplexOptions()
        workers = worker_count()
        blocks = np.array_split(np.arange(pts.shape[0]), workers) if workers > 1 else [
            np.arange(pts.shape[0])
        ]
        blocks = [b for b in blocks if b.size]

        def run_block(idx):
            state = LpState()
            m = idx.size
            vals = np.full(m, np.nan)
            sums = np.full(m, np.nan)
            nz = np.zeros(m, dtype=int)
            objs = np.full(m, np.nan)
            matrix = np.zeros((m, self.nodes_.n)) if need_matrix else None
            pivots = 0
            failures = []
            for row in range(0, m, _CHUNK):
                sel = idx[row : row + _CHUNK]
                dist = self._distances(pts[sel])
                for k, i in enumerate(sel):
                    try:
                        sol = self._solve_point(pts[i], dist[k], state, options)
                    except (NumericalFailureError, InfeasibleConstructionError) as exc:
                        failures.append((int(i), str(exc)))
                        continue
                    pos = row + k
                    vec = sol.coefficients
                    sums[pos] = vec.abs_sum
                    nz[pos] = vec.nonzeros
                    objs[pos] = sol.objective
                    pivots += sol.iterations
                    if matrix is not None:
                        matrix[pos] = vec.dense()
                    if self.values_ is not None:
                        vals[pos] = vec.apply(self.values_)
            return vals, sums, nz, objs, pivots, failures, matrix

        results = map_chunks(run_block, blocks, workers)
        values = np.concatenate([r[0] for r in results])
        abs_sums = np.concatenate([r[1] for r in results])
        nonzeros = np.concatenate([r[2] for r in results])
        objectives = np.concatenate([r[3] for r in results])
        iterations = int(sum(r[4] for r in results))
        failures = tuple(f for r in results for f in r[5])
        matrix = np.vstack([r[6] for r in results]) if need_matrix else None
        return LpSweep(
            values if self.values_ is not None else None,
            abs_sums, nonzeros, objectives, iterations, failures, matrix,
        )

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        if self.values_ is None:
            raise NotFittedError("fit() was called without node samples")
        return self.sweep(X).values

    def evaluate(self, values, points) -> np.ndarray:
        """Combine an explicit sample vector with per-point coefficients."""
        self._check_fitted()
        values = np.asarray(values, dtype=float).ravel()
        if values.shape[0] != self.nodes_.n:
            raise InvalidArgumentError(
                f"{values.shape[0]} samples for {self.nodes_.n} nodes"
            )
        sweep = self.sweep(points, need_matrix=True)
        return sweep.matrix @ values

    def lebesgue_function(self, points) -> np.ndarray:
        return self.sweep(points).abs_sums

    def coefficient_matrix(self, points) -> np.ndarray:
        return self.sweep(points, need_matrix=True).matrix
