"""Moving least squares engine against an independent KKT saddle solve.

The engine computes coefficients through the Gram (normal-equations)
system; the oracle here solves the full symmetric saddle system

    [ 2 diag(1/w)   P ] [a]   [ 0  ]
    [ P^T           0 ] [mu] = [p(x)]

with a single dense LU factorization, which shares no code path with the
engine's Cholesky/QR route.
"""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fdpr.basis import eval_basis
from fdpr.errors import IllConditionedSystemError, InvalidArgumentError
from fdpr.geometry import Domain, generate_grid, grid_points, node_set, perturb
from fdpr.mls import MovingLeastSquares, Shepard
from fdpr.weights import eval_weight


def saddle_coefficients(engine, x):
    """Minimize sum a_i^2/w_i under the reproduction constraints."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    w = np.atleast_1d(
        eval_weight(engine.weight_, pts, engine.nodes_.points, engine.scale_))
    p = engine.collocation_
    n, q = p.shape
    kkt = np.zeros((n + q, n + q))
    kkt[:n, :n] = np.diag(2.0 / w)
    kkt[:n, n:] = p
    kkt[n:, :n] = p.T
    rhs = np.concatenate([np.zeros(n), np.atleast_2d(eval_basis(engine.basis_, pts))[0]])
    return np.linalg.solve(kkt, rhs)[:n]


@pytest.mark.parametrize("weight,degree,tol", [
    ("gaussian:nu=1.0", 1, 1e-9),
    ("gaussian:nu=1.0", 2, 1e-9),
    ("exponential:nu=1.5", 1, 1e-9),
    # the power law spans ~14 orders of magnitude across the nodes at
    # x = 0.99, so the two factorizations share only ~7 digits there
    ("algebraic:k=6.2", 1, 1e-7),
])
def test_coefficients_match_saddle_oracle_1d(weight, degree, tol):
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 13)
    est = MovingLeastSquares(degree=degree, weight=weight).fit(nodes)
    for x in (-0.83, -0.31, 0.07, 0.52, 0.99):
        got = est.coefficients(np.array([x]))
        expected = saddle_coefficients(est, [x])
        np.testing.assert_allclose(got.dense(), expected, atol=tol)


def test_coefficients_match_saddle_oracle_2d():
    nodes = generate_grid(Domain((0.0, 0.0), (1.0, 1.0)), (7, 7))
    est = MovingLeastSquares(degree=1, weight="gaussian:nu=1.0").fit(nodes)
    rng = np.random.default_rng(2)
    for x in rng.uniform(0.0, 1.0, size=(8, 2)):
        got = est.coefficients(x).dense()
        np.testing.assert_allclose(got, saddle_coefficients(est, x), atol=1e-9)


def test_gram_system_is_the_weighted_normal_matrix():
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 9)
    est = MovingLeastSquares(degree=1).fit(nodes)
    x = np.array([0.3])
    gram, rhs = est.gram_system(x)
    w = np.atleast_1d(eval_weight(est.weight_, x[None, :], nodes.points, est.scale_))
    p = est.collocation_
    np.testing.assert_allclose(gram, (p.T * w) @ p, rtol=1e-13)
    np.testing.assert_allclose(rhs, eval_basis(est.basis_, x[None, :])[0], rtol=1e-14)


def test_polynomials_of_fit_degree_are_reproduced():
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 17)
    est = MovingLeastSquares(degree=2, weight="gaussian:nu=1.0").fit(nodes)
    pts = grid_points(nodes.domain, 301)
    f = lambda p: 0.3 - 1.2 * p[:, 0] + 0.8 * p[:, 0] ** 2
    approx = est.evaluate(f(nodes.points), pts)
    np.testing.assert_allclose(approx, f(pts), atol=1e-10)


def test_partition_of_unity_at_any_degree():
    # constants are in every polynomial space, so rows always sum to one
    nodes = generate_grid(Domain((0.0, 0.0), (1.0, 1.0)), (6, 6))
    pts = grid_points(nodes.domain, (21, 21))
    for degree in (0, 1, 2):
        est = MovingLeastSquares(degree=degree).fit(nodes)
        rows = est.coefficient_matrix(pts)
        np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-12)


def test_shepard_closed_form():
    nodes = perturb(generate_grid(Domain((-1.0,), (1.0,)), 9), 0.3, seed=1)
    est = Shepard(weight="gaussian:nu=2.0").fit(nodes)
    pts = grid_points(nodes.domain, 41)
    rows = est.coefficient_matrix(pts)
    w = eval_weight(est.weight_, pts[:, None, :], nodes.points[None, :, :], est.scale_)
    np.testing.assert_allclose(rows, w / w.sum(axis=1, keepdims=True), rtol=1e-13)
    assert np.all(rows >= 0.0)
    np.testing.assert_allclose(est.lebesgue_function(pts), 1.0, atol=1e-13)


def test_shepard_has_no_degree_parameter():
    est = Shepard()
    assert est.degree == 0
    assert "degree" not in est.get_params()


def test_snap_rule_gives_cardinal_rows_on_nodes():
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 9)
    est = MovingLeastSquares(degree=1, weight="algebraic:k=6.2").fit(nodes)
    rows = est.coefficient_matrix(nodes.points)
    np.testing.assert_allclose(rows, np.eye(9), atol=1e-12)
    # slightly off-node evaluations stay finite and reproduce exactly
    x = nodes.points[4, 0] + 1e-9
    row = est.coefficients(np.array([x])).dense()
    assert np.isfinite(row).all()


def test_interpolates_at_nodes_for_smooth_weights():
    # gaussian weights do not interpolate exactly, but reproduction of
    # constants keeps node values close for localized weights
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 17)
    est = MovingLeastSquares(degree=1, weight="gaussian:nu=1.0", delta_factor=2.0)
    est.fit(nodes, np.sin(np.pi * nodes.points[:, 0]))
    pred = est.predict(nodes.points)
    np.testing.assert_allclose(pred, np.sin(np.pi * nodes.points[:, 0]), atol=5e-2)


def test_not_fitted_errors():
    est = MovingLeastSquares()
    with pytest.raises(NotFittedError):
        est.predict(np.array([[0.0]]))
    with pytest.raises(NotFittedError):
        est.coefficients(np.array([0.0]))
    fitted = est.fit(generate_grid(Domain((-1.0,), (1.0,)), 9))
    with pytest.raises(NotFittedError):
        fitted.predict(np.array([[0.0]]))  # fit() had no samples


def test_predict_equals_evaluate():
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 17)
    y = np.sin(np.pi * nodes.points[:, 0])
    est = MovingLeastSquares(degree=1).fit(nodes, y)
    pts = grid_points(nodes.domain, 101)
    np.testing.assert_array_equal(est.predict(pts), est.evaluate(y, pts))


def test_fit_validations():
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 9)
    with pytest.raises(InvalidArgumentError):
        MovingLeastSquares(degree=1).fit(nodes, np.zeros(5))
    with pytest.raises(InvalidArgumentError):
        MovingLeastSquares(degree=9).fit(nodes)  # 9 nodes, 10-dim space
    collinear = node_set(
        Domain((0.0, 0.0), (1.0, 1.0)),
        np.array([[0.0, 0.0], [0.25, 0.25], [0.5, 0.5], [1.0, 1.0]]),
    )
    with pytest.raises(IllConditionedSystemError):
        MovingLeastSquares(degree=1).fit(collinear)


def test_coefficients_takes_a_single_point():
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 9)
    est = MovingLeastSquares().fit(nodes, np.zeros(9))
    with pytest.raises(InvalidArgumentError):
        est.coefficients(np.zeros((2, 1)))
    with pytest.raises(InvalidArgumentError):
        est.predict(np.zeros((3, 2)))  # wrong dimension


def test_sweep_consistency():
    nodes = generate_grid(Domain((-1.0,), (1.0,)), 17)
    y = np.cos(nodes.points[:, 0])
    est = MovingLeastSquares(degree=1).fit(nodes, y)
    pts = grid_points(nodes.domain, 101)
    sweep = est.sweep(pts, need_matrix=True)
    np.testing.assert_allclose(sweep.values, sweep.matrix @ y, rtol=1e-13)
    np.testing.assert_allclose(
        sweep.abs_sums, np.abs(sweep.matrix).sum(axis=1), rtol=1e-13)
    np.testing.assert_array_equal(est.lebesgue_function(pts), est.sweep(pts).abs_sums)


def test_estimator_protocol_round_trip():
    est = MovingLeastSquares(degree=2, weight="exponential:nu=2.0", delta_factor=3.0)
    params = est.get_params()
    assert params["degree"] == 2 and params["delta_factor"] == 3.0
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(degree=1)
    assert twin.degree == 1 and est.degree == 2


def test_fit_accepts_raw_coordinate_arrays():
    pts = np.linspace(0.0, 1.0, 11)
    est = MovingLeastSquares(degree=1).fit(pts[:, None])
    assert est.nodes_.domain.lower == (0.0,)
    assert est.nodes_.domain.upper == (1.0,)
    # 1-D convenience: a flat vector of evaluation abscissae
    vals = est.evaluate(np.ones(11), np.array([0.25, 0.75]))
    np.testing.assert_allclose(vals, 1.0, atol=1e-12)
