"""Two-phase revised simplex against scipy's HiGHS solver."""

import numpy as np
import pytest
from scipy.optimize import linprog

from fdpr.errors import InfeasibleConstructionError, NumericalFailureError
from fdpr.simplex import RevisedSimplex, SimplexOptions, SimplexResult


def random_feasible_lp(rng, m, n, sparse_support=True):
    a = rng.normal(size=(m, n))
    x0 = rng.uniform(0.0, 2.0, size=n)
    if sparse_support:
        # few-support right-hand sides produce plenty of degenerate vertices
        keep = rng.choice(n, size=rng.integers(1, m + 1), replace=False)
        mask = np.zeros(n)
        mask[keep] = 1.0
        x0 = x0 * mask
    b = a @ x0
    c = rng.uniform(0.0, 2.0, size=n)
    return c, a, b


def test_matches_highs_on_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(120):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(m, m + 8))
        c, a, b = random_feasible_lp(rng, m, n)
        res = RevisedSimplex(c, a, b).solve()
        ref = linprog(c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
        assert ref.status == 0
        assert res.objective == pytest.approx(ref.fun, abs=1e-9 * (1 + abs(ref.fun)))
        # returned point is feasible and consistent with its objective
        np.testing.assert_allclose(a @ res.x, b, atol=1e-8)
        assert res.x.min() >= -1e-10
        assert res.objective == pytest.approx(float(c @ res.x), abs=1e-12)


def test_vertex_support_never_exceeds_row_count():
    rng = np.random.default_rng(3)
    for _ in range(60):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(m + 2, m + 9))
        c, a, b = random_feasible_lp(rng, m, n)
        res = RevisedSimplex(c, a, b).solve()
        assert np.count_nonzero(np.abs(res.x) > 0) <= m
        assert res.basis.size == m


def test_infeasible_detection():
    # x1 + x2 = -1 has no nonnegative solution
    with pytest.raises(InfeasibleConstructionError):
        RevisedSimplex([1.0, 1.0], [[1.0, 1.0]], [-1.0]).solve()
    ref = linprog([1, 1], A_eq=[[1, 1]], b_eq=[-1], bounds=(0, None), method="highs")
    assert ref.status == 2


def test_fully_degenerate_zero_rhs():
    # every basic solution is the origin: the cycling guard must still land
    rng = np.random.default_rng(11)
    a = rng.normal(size=(3, 8))
    c = rng.uniform(0.5, 1.5, size=8)
    res = RevisedSimplex(c, a, np.zeros(3)).solve()
    assert res.objective == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(res.x, 0.0, atol=1e-12)


def test_unbounded_direction_raises():
    # min -x1 subject to x1 - x2 = 1 decreases without bound along (1, 1)
    with pytest.raises(NumericalFailureError):
        RevisedSimplex([-1.0, 0.0], [[1.0, -1.0]], [1.0]).solve()


def test_iteration_cap():
    rng = np.random.default_rng(5)
    c, a, b = random_feasible_lp(rng, 3, 9, sparse_support=False)
    with pytest.raises(NumericalFailureError):
        RevisedSimplex(c, a, b, SimplexOptions(max_iterations=1)).solve()


def test_dimension_check():
    with pytest.raises(NumericalFailureError):
        RevisedSimplex([1.0, 2.0], [[1.0]], [1.0])


def test_resume_primal_from_optimal_basis_is_free():
    rng = np.random.default_rng(7)
    c, a, b = random_feasible_lp(rng, 2, 6)
    solver = RevisedSimplex(c, a, b)
    first = solver.solve()
    again = RevisedSimplex(c, a, b).resume_primal(first.basis)
    assert again.iterations == 0
    assert again.objective == pytest.approx(first.objective, abs=1e-12)


def test_resume_dual_after_rhs_change():
    rng = np.random.default_rng(9)
    c, a, b = random_feasible_lp(rng, 3, 7, sparse_support=False)
    first = RevisedSimplex(c, a, b).solve()
    # a new right-hand side keeps the old basis dual feasible
    b2 = a @ rng.uniform(0.0, 2.0, size=7)
    resumed = RevisedSimplex(c, a, b2).resume_dual(first.basis)
    fresh = RevisedSimplex(c, a, b2).solve()
    assert resumed.objective == pytest.approx(fresh.objective, abs=1e-9)
    assert resumed.x.min() >= -1e-9


def test_basis_state_rejects_bad_bases():
    solver = RevisedSimplex([1.0, 1.0, 1.0], [[1.0, 1.0, 0.0]], [1.0])
    assert solver.basis_state([0, 1]) is None  # wrong size
    assert solver.basis_state([7]) is None  # out of range
    two_rows = RevisedSimplex(
        [1.0, 1.0, 1.0], [[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]], [1.0, 2.0])
    assert two_rows.basis_state([0, 1]) is None  # singular pair
    ok = solver.basis_state([0])
    assert ok is not None
    binv, xb = ok
    np.testing.assert_allclose(xb, [1.0])


def test_trace_callback_sees_pivots():
    rng = np.random.default_rng(13)
    c, a, b = random_feasible_lp(rng, 2, 6, sparse_support=False)
    lines = []
    res = RevisedSimplex(c, a, b, SimplexOptions(trace=lines.append)).solve()
    assert isinstance(res, SimplexResult)
    assert res.iterations > 0
    # basis-repair pivots are not traced, so the log can run short
    assert 0 < len(lines) <= res.iterations
    assert all("enter=" in line for line in lines)
