"""Dense two-phase revised simplex for small-row linear programs.

The engine keeps an explicit basis inverse (row counts here are the
polynomial-space dimension, a few dozen at most), updates it with
elementary pivots, and refactorizes periodically.  Pricing is Dantzig's
rule with first-index tie-breaking; a cycling guard switches to Bland's
rule after too many degenerate pivots.  A dual-simplex loop supports
warm starts whose basis lost primal feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InfeasibleConstructionError, NumericalFailureError

__all__ = ["SimplexOptions", "SimplexResult", "RevisedSimplex"]


@dataclass(frozen=True)
class SimplexOptions:
    feasibility_tol: float = 1e-10
    optimality_tol: float = 1e-10
    pivot_tol: float = 1e-11
    refactor_every: int = 50
    max_iterations: int = 0  # 0: derive from the problem size
    trace: Optional[Callable[[str], None]] = None


@dataclass(frozen=True, eq=False)
class SimplexResult:
    x: np.ndarray
    objective: float
    basis: np.ndarray
    dual: np.ndarray
    iterations: int
    status: str = "optimal"


class RevisedSimplex:
    """One LP instance ``min c.x  s.t.  A x = b, x >= 0`` plus solver state."""

    def __init__(self, c, a, b, options: SimplexOptions | None = None):
        self.c = np.asarray(c, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.opts = options or SimplexOptions()
        if self.a.ndim != 2 or self.a.shape != (self.b.size, self.c.size):
            raise NumericalFailureError("inconsistent LP dimensions")
        self.m, self.n = self.a.shape
        self._max_iter = self.opts.max_iterations or (1000 + 40 * (self.n + self.m))

    # -- driver entry points -------------------------------------------

    def solve(self) -> SimplexResult:
        """Cold start: phase 1 with artificials, then phase 2."""
        flip = np.where(self.b < 0.0, -1.0, 1.0)
        a1 = np.hstack([self.a * flip[:, None], np.eye(self.m)])
        b1 = self.b * flip
        c1 = np.concatenate([np.zeros(self.n), np.ones(self.m)])
        state = _State(
            basis=np.arange(self.n, self.n + self.m),
            binv=np.eye(self.m),
            xb=b1.copy(),
        )
        self._primal_loop(c1, a1, b1, state, phase=1)
        scale = 1.0 + float(np.abs(b1).max(initial=0.0))
        if float(c1[state.basis] @ state.xb) > self.opts.feasibility_tol * scale:
            raise InfeasibleConstructionError(
                "phase 1 ended with positive artificial mass"
            )
        self._drive_out_artificials(a1, b1, state)
        return self._run_phase2_primal(state, already_flipped=(a1[:, : self.n], b1, flip))

    def resume_primal(self, basis) -> SimplexResult:
        """Primal simplex from a given (primal-feasible) structural basis."""
        state = self._load(basis)
        return self._run_phase2_primal(state)

    def resume_dual(self, basis) -> SimplexResult:
        """Dual simplex from a given (dual-feasible) structural basis."""
        state = self._load(basis)
        self._dual_loop(self.c, self.a, self.b, state)
        return self._finish(state)

    def basis_state(self, basis):
        """Basis inverse and basic solution for a candidate basis, or None."""
        basis = np.asarray(basis, dtype=int)
        if basis.size != self.m or np.unique(basis).size != self.m:
            return None
        if basis.min() < 0 or basis.max() >= self.n:
            return None
        try:
            binv = np.linalg.inv(self.a[:, basis])
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(binv)):
            return None
        return binv, binv @ self.b

    # -- internals -------------------------------------------------------

    def _load(self, basis) -> "_State":
        loaded = self.basis_state(basis)
        if loaded is None:
            raise NumericalFailureError("starting basis is singular")
        binv, xb = loaded
        return _State(basis=np.asarray(basis, dtype=int).copy(), binv=binv, xb=xb)

    def _run_phase2_primal(self, state: "_State", already_flipped=None) -> SimplexResult:
        if already_flipped is not None:
            a, b, _ = already_flipped
        else:
            a, b = self.a, self.b
        self._primal_loop(self.c, a, b, state, phase=2)
        return self._finish(state)

    def _finish(self, state: "_State") -> SimplexResult:
        # fresh factorization so the reported vertex is as clean as the data
        loaded = self.basis_state(state.basis)
        if loaded is None:
            raise NumericalFailureError("optimal basis became singular")
        binv, xb = loaded
        scale = 1.0 + float(np.abs(self.b).max(initial=0.0))
        if xb.min(initial=0.0) < -self.opts.feasibility_tol * scale:
            raise NumericalFailureError("final basic solution lost feasibility")
        x = np.zeros(self.n)
        x[state.basis] = np.maximum(xb, 0.0)
        dual = self.c[state.basis] @ binv
        return SimplexResult(
            x=x,
            objective=float(self.c @ x),
            basis=state.basis.copy(),
            dual=dual,
            iterations=state.iterations,
        )

    def _primal_loop(self, c, a, b, state: "_State", phase: int) -> None:
        opts = self.opts
        n = a.shape[1]
        cb = c[state.basis]
        while True:
            if state.iterations >= self._max_iter:
                raise NumericalFailureError(
                    f"simplex iteration cap hit in phase {phase}"
                )
            u = cb @ state.binv
            reduced = c - u @ a
            reduced[state.basis] = np.inf
            if state.bland:
                candidates = np.nonzero(reduced < -opts.optimality_tol)[0]
                if candidates.size == 0:
                    return
                enter = int(candidates[0])
            else:
                enter = int(np.argmin(reduced))
                if reduced[enter] >= -opts.optimality_tol:
                    return
            direction = state.binv @ a[:, enter]
            leave_row = self._ratio_test(state, direction)
            if leave_row is None:
                raise NumericalFailureError(
                    "unbounded direction in a nonnegative-cost program"
                )
            self._pivot(state, a, b, enter, leave_row, direction)
            cb = c[state.basis]
            if opts.trace is not None:
                obj = float(cb @ state.xb)
                opts.trace(
                    f"phase={phase} it={state.iterations} enter={enter} "
                    f"leave_row={leave_row} obj={obj:.12g}"
                )

    def _dual_loop(self, c, a, b, state: "_State") -> None:
        opts = self.opts
        while True:
            if state.iterations >= self._max_iter:
                raise NumericalFailureError("dual simplex iteration cap hit")
            r = int(np.argmin(state.xb))
            if state.xb[r] >= -opts.feasibility_tol:
                return
            cb = c[state.basis]
            u = cb @ state.binv
            reduced = c - u @ a
            row = state.binv[r] @ a
            mask = row < -opts.pivot_tol
            mask[state.basis] = False
            idx = np.nonzero(mask)[0]
            if idx.size == 0:
                raise InfeasibleConstructionError(
                    "dual simplex found an empty pivot row: primal infeasible"
                )
            ratios = reduced[idx] / -row[idx]
            enter = int(idx[np.argmin(ratios)])
            direction = state.binv @ a[:, enter]
            self._pivot(state, a, b, enter, r, direction)
            if opts.trace is not None:
                opts.trace(
                    f"dual it={state.iterations} enter={enter} leave_row={r}"
                )

    def _ratio_test(self, state: "_State", direction: np.ndarray):
        opts = self.opts
        positive = np.nonzero(direction > opts.pivot_tol)[0]
        if positive.size == 0:
            return None
        ratios = state.xb[positive] / direction[positive]
        ratios = np.maximum(ratios, 0.0)
        best = ratios.min()
        # ties go to the smallest basic variable index (anti-cycling, determinism)
        near = positive[ratios <= best + 1e-12 * (1.0 + best)]
        leave_row = int(near[np.argmin(state.basis[near])])
        if best <= opts.feasibility_tol:
            state.degenerate += 1
            if state.degenerate > 5 * self.n and not state.bland:
                state.bland = True
        return leave_row

    def _pivot(self, state: "_State", a, b, enter: int, leave_row: int,
               direction: np.ndarray) -> None:
        piv = direction[leave_row]
        if abs(piv) < self.opts.pivot_tol:
            # stale inverse: refactorize and retry the pivot once
            loaded = self._refactor_general(a, b, state.basis)
            if loaded is None:
                raise NumericalFailureError("singular basis during pivot")
            state.binv, state.xb = loaded
            direction = state.binv @ a[:, enter]
            piv = direction[leave_row]
            if abs(piv) < self.opts.pivot_tol:
                raise NumericalFailureError("vanishing pivot element")
        step = state.xb[leave_row] / piv
        state.xb -= step * direction
        state.xb[leave_row] = step
        pivot_row = state.binv[leave_row].copy()
        state.binv -= np.outer(direction, pivot_row) / piv
        state.binv[leave_row] = pivot_row / piv
        state.basis[leave_row] = enter
        state.iterations += 1
        state.since_refactor += 1
        if state.since_refactor >= self.opts.refactor_every:
            loaded = self._refactor_general(a, b, state.basis)
            if loaded is None:
                raise NumericalFailureError("singular basis at refactorization")
            state.binv, state.xb = loaded
            state.since_refactor = 0

    @staticmethod
    def _refactor_general(a, b, basis):
        try:
            binv = np.linalg.inv(a[:, basis])
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(binv)):
            return None
        return binv, binv @ b

    def _drive_out_artificials(self, a1, b1, state: "_State") -> None:
        """Replace basic artificials (at level zero) with structural columns."""
        for row in range(self.m):
            if state.basis[row] < self.n:
                continue
            tableau_row = state.binv[row] @ a1[:, : self.n]
            tableau_row[state.basis[state.basis < self.n]] = 0.0
            cand = np.nonzero(np.abs(tableau_row) > self.opts.pivot_tol)[0]
            if cand.size == 0:
                raise NumericalFailureError(
                    "rank-deficient constraints: artificial cannot leave the basis"
                )
            enter = int(cand[0])
            direction = state.binv @ a1[:, enter]
            self._pivot(state, a1, b1, enter, row, direction)


@dataclass
class _State:
    basis: np.ndarray
    binv: np.ndarray
    xb: np.ndarray
    iterations: int = 0
    degenerate: int = 0
    since_refactor: int = 0
    bland: bool = False
