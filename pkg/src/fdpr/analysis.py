"""Empirical and theoretical diagnostics for the engines.

The empirical half evaluates fitted engines on dense grids: sup-norm
errors, Lebesgue functions and constants, convergence slopes, and
polynomial-reproduction residuals.  The theoretical half assembles the
decay constants of the underlying local-reproduction estimates and sums
the stability series they imply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import clone

from .basis import eval_basis
from .errors import (
    DivergentSeriesError,
    InvalidArgumentError,
    NumericalFailureError,
    UnsupportedAngleError,
)
from .geometry import Domain, generate_grid, grid_points, perturb
from .weights import WeightSpec, phi

__all__ = [
    "LebesgueScan",
    "ConvergenceLevel",
    "ConvergenceReport",
    "TheoryConstants",
    "DecayBound",
    "StabilityBound",
    "lebesgue_scan",
    "sup_error",
    "convergence_study",
    "reproduction_residual",
    "cone_constants",
    "decay_pair",
    "stability_bound",
    "empirical_decay_constant",
    "weighted_moment",
    "default_eval_counts",
    "write_report_csv",
    "write_basis_csv",
]

MAX_SERIES_TERMS = 10_000_000
_SERIES_REL_TOL = 1e-12


# ---------------------------------------------------------------------------
# empirical scans
# ---------------------------------------------------------------------------

def default_eval_counts(dim: int) -> tuple:
    """Evaluation-grid resolution used by the studies: dense in 1-D,
    101 per axis in 2-D and beyond."""
    return (2001,) if dim == 1 else (101,) * dim


@dataclass(frozen=True, eq=False)
class LebesgueScan:
    """Lebesgue function on a grid and its maximum."""

    values: np.ndarray
    constant: float
    certified: bool = True
    failures: tuple = ()


def lebesgue_scan(engine, points) -> LebesgueScan:
    """Sum of absolute coefficients per point; the max is the Lebesgue constant.

    Any per-point solver failure leaves a NaN entry and marks the scan
    as not certified.
    """
    sweep = engine.sweep(points)
    failures = tuple(getattr(sweep, "failures", ()))
    values = sweep.abs_sums
    ok = np.isfinite(values)
    constant = float(values[ok].max()) if ok.any() else math.nan
    return LebesgueScan(values, constant, certified=not failures and ok.all(),
                        failures=failures)


def sup_error(engine, f, points) -> float:
    """Sup-norm error of the engine's quasi-interpolant of ``f`` on a grid."""
    samples = np.asarray(f(engine.nodes_.points), dtype=float)
    approx = engine.evaluate(samples, points)
    exact = np.asarray(f(np.atleast_2d(points)), dtype=float)
    diff = np.abs(approx - exact)
    if not np.all(np.isfinite(diff)):
        raise NumericalFailureError("sup-error scan hit unevaluable points")
    return float(diff.max())


@dataclass(frozen=True)
class ConvergenceLevel:
    n: int
    fill: float
    separation: float
    delta: float
    sup_error: float
    lebesgue: float


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Error decay over a refinement sequence with a fitted log-log slope."""

    levels: tuple
    slope: float
    noise_floor: bool

    @property
    def errors(self) -> np.ndarray:
        return np.array([lv.sup_error for lv in self.levels])

    @property
    def running_slopes(self) -> np.ndarray:
        """Level-to-level slopes; the first entry (no predecessor) is NaN."""
        out = [math.nan]
        for prev, cur in zip(self.levels, self.levels[1:]):
            if (
                self.noise_floor
                or prev.sup_error <= 0.0
                or cur.sup_error <= 0.0
                or cur.fill == prev.fill
            ):
                out.append(math.nan)
            else:
                out.append(
                    math.log(cur.sup_error / prev.sup_error)
                    / math.log(cur.fill / prev.fill)
                )
        return np.array(out)


# sup errors below this are treated as rounding noise, not convergence data
NOISE_FLOOR = 1e-10


def convergence_study(prototype, f, domain: Domain, counts_sequence, *,
                      eval_counts=None, perturb_fraction: float = 0.0,
                      seed: int = 0, with_lebesgue: bool = True) -> ConvergenceReport:
    """Fit clones of ``prototype`` on a refinement sequence and track errors.

    Parameters
    ----------
    prototype : estimator
        Unfitted engine; cloned per level.
    f : callable
        Target sampled on the nodes and compared on the evaluation grid.
    domain : Domain
    counts_sequence : iterable
        Per-level node counts; each entry is an int (same per axis) or a
        per-axis tuple.
    eval_counts : tuple, optional
        Evaluation-grid resolution (default :func:`default_eval_counts`).
    perturb_fraction : float
        If positive, each level's grid is perturbed by this fraction.
    """
    eval_pts = grid_points(domain, eval_counts or default_eval_counts(domain.dim))
    levels = []
    for counts in counts_sequence:
        nodes = generate_grid(domain, counts)
        if perturb_fraction > 0.0:
            nodes = perturb(nodes, perturb_fraction, seed)
        engine = clone(prototype).fit(nodes, np.asarray(f(nodes.points), dtype=float))
        sweep = engine.sweep(eval_pts)
        failures = tuple(getattr(sweep, "failures", ()))
        if failures:
            raise NumericalFailureError(
                f"{len(failures)} evaluation points failed at n={nodes.n}"
            )
        err = float(np.abs(sweep.values - np.asarray(f(eval_pts))).max())
        leb = float(sweep.abs_sums.max()) if with_lebesgue else math.nan
        levels.append(ConvergenceLevel(
            nodes.n, nodes.fill_estimate, nodes.separation, engine.delta_, err, leb,
        ))
    errors = np.array([lv.sup_error for lv in levels])
    fills = np.array([lv.fill for lv in levels])
    noise = bool(errors.max(initial=0.0) <= NOISE_FLOOR)
    if noise or len(levels) < 2 or np.any(errors <= 0.0):
        slope = math.nan
    else:
        slope = float(np.polyfit(np.log(fills), np.log(errors), 1)[0])
    return ConvergenceReport(tuple(levels), slope, noise)


def reproduction_residual(engine, points, trials: int = 50, seed: int = 0) -> float:
    """Worst reproduction defect over random polynomials of the fitted space.

    Draws ``trials`` coefficient vectors in the engine's own basis and
    compares the coefficient-weighted node samples against the true
    polynomial values on ``points``.
    """
    rng = np.random.default_rng(seed)
    spec = engine.basis_
    coeffs = rng.uniform(-1.0, 1.0, size=(spec.size, trials))
    node_vals = eval_basis(spec, engine.nodes_.points) @ coeffs
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    exact = eval_basis(spec, pts) @ coeffs
    matrix = engine.coefficient_matrix(pts)
    if not np.all(np.isfinite(matrix)):
        raise NumericalFailureError("reproduction scan hit unevaluable points")
    return float(np.abs(matrix @ node_vals - exact).max())


def empirical_decay_constant(engine, points, profile: WeightSpec) -> float:
    """Smallest C with |a_j(x)| <= C * profile(dist/separation) on the grid.

    Node-coincident points are excluded for profiles that diverge at
    zero (their coefficients are bounded by one anyway).
    """
    matrix = np.abs(engine.coefficient_matrix(points))
    dist = cdist(np.atleast_2d(points), engine.nodes_.points) / engine.nodes_.separation
    if profile.divergent_at_zero:
        mask = dist > 0.0
        ratios = np.zeros_like(matrix)
        ratios[mask] = matrix[mask] / phi(profile, dist[mask])
    else:
        ratios = matrix / phi(profile, dist)
    return float(ratios.max())


def weighted_moment(engine, points, moment: int) -> float:
    """Max over the grid of sum_j (dist_j / separation)**moment * |a_j(x)|."""
    matrix = np.abs(engine.coefficient_matrix(points))
    dist = cdist(np.atleast_2d(points), engine.nodes_.points) / engine.nodes_.separation
    return float((dist**moment * matrix).sum(axis=1).max())


# ---------------------------------------------------------------------------
# theory constants and stability series
# ---------------------------------------------------------------------------

MAX_CONE_ANGLE = math.pi / 5.0


@dataclass(frozen=True)
class TheoryConstants:
    """Cone-geometry constants of the local polynomial-reproduction bound."""

    cone_angle: float
    cone_radius: float
    degree: int
    c1: float
    c2: float
    h0: float


def cone_constants(cone_angle: float, cone_radius: float, degree: int) -> TheoryConstants:
    """Norming-constant pair for interior cones, valid up to angle pi/5.

    ``c1`` bounds the reproduction coefficients, ``c2`` scales the
    constraint radius, and ``h0 = radius / c2`` is the fill-distance
    threshold below which the construction applies.
    """
    if not (0.0 < cone_angle <= MAX_CONE_ANGLE + 1e-15):
        raise UnsupportedAngleError(
            f"cone angle {cone_angle} outside (0, pi/5]"
        )
    if cone_radius <= 0.0:
        raise InvalidArgumentError("cone radius must be positive")
    if degree < 0:
        raise InvalidArgumentError("degree must be nonnegative")
    s = math.sin(cone_angle)
    c1 = 2.0
    c2 = 16.0 * (1.0 + s) ** 2 * degree**2 / (3.0 * s**2)
    h0 = math.inf if c2 == 0.0 else cone_radius / c2
    return TheoryConstants(cone_angle, cone_radius, degree, c1, c2, h0)


@dataclass(frozen=True)
class DecayBound:
    """Fast-decay envelope |a_j(x)| <= amplitude * profile(dist / separation)."""

    constants: TheoryConstants
    amplitude: float
    profile: WeightSpec


def decay_pair(constants: TheoryConstants, weight: WeightSpec, method: str,
               c_qu: float, gamma: float = 0.5,
               c_gamma: float | None = None) -> DecayBound:
    """Decay amplitude and profile implied by an engine/weight combination.

    For separation-scaled weights the pair is expressed directly through
    the profile; for delta-scaled ones it needs the localization bracket
    ``gamma * c_gamma * fill <= delta <= c_gamma * fill``.

    Parameters
    ----------
    method : str
        "mls" or "one-norm".
    c_qu : float
        Quasi-uniformity ratio of the node sets the bound is used for.
    gamma, c_gamma : float
        Bracket constants; required only for delta-scaled weights.
    """
    if method not in ("mls", "one-norm"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    if c_qu < 1.0 - 1e-12:
        raise InvalidArgumentError("quasi-uniformity ratio must be >= 1")
    c1, c2 = constants.c1, constants.c2
    if weight.scale_source == "separation":
        base = phi(weight, c2 * c_qu) if c2 > 0 else 1.0
        if method == "mls":
            amplitude = math.sqrt(c1 * c1 / base)
            prof = WeightSpec(weight.family, weight.shape / 2.0, "separation")
        else:
            amplitude = c1 / base
            prof = WeightSpec(weight.family, weight.shape, "separation")
        return DecayBound(constants, float(amplitude), prof)

    if weight.family == "algebraic":
        raise InvalidArgumentError(
            "delta-scaled constants are not defined for the algebraic family"
        )
    if c_gamma is None or not (0.0 < gamma < 1.0) or c_gamma <= 0.0:
        raise InvalidArgumentError(
            "delta-scaled constants need gamma in (0,1) and c_gamma > 0"
        )
    g = gamma * c_gamma
    nu = weight.shape
    if weight.family == "gaussian":
        boost = nu * (c2 / g) ** 2
        if method == "mls":
            amplitude = math.e * c1 * float(np.exp(0.5 * boost))
            rate = math.sqrt(nu / 2.0) / (c_gamma * c_qu)
        else:
            amplitude = math.e * c1 * float(np.exp(boost))
            rate = math.sqrt(nu) / (c_gamma * c_qu)
    else:
        boost = nu * c2 / g
        if method == "mls":
            amplitude = c1 * float(np.exp(0.5 * boost))
            rate = nu / (2.0 * c_gamma * c_qu)
        else:
            amplitude = c1 * float(np.exp(boost))
            rate = nu / (c_gamma * c_qu)
    return DecayBound(constants, float(amplitude), WeightSpec("exponential", rate, "separation"))


@dataclass(frozen=True)
class StabilityBound:
    """Truncated value of the shell series 3^d * C * sum (n+1)^(d+l-1) phi(n)."""

    value: float
    terms: int
    tail_bound: float


def _profile_term(weight: WeightSpec, n: int) -> float:
    # unclamped profile values: the series needs true magnitudes
    if weight.family == "gaussian":
        return math.exp(-weight.shape * n * n)
    if weight.family == "exponential":
        return math.exp(-weight.shape * n)
    # algebraic: the zero shell is capped at the profile's value at one
    return 1.0 if n == 0 else float(n) ** (-weight.shape)


def stability_bound(amplitude: float, weight: WeightSpec, dim: int,
                    moment: int = 0) -> StabilityBound:
    """Sum the stability series for a decay profile.

    Terms are ``(n+1)**(dim + moment - 1) * profile(n)`` over integer
    shells n >= 0; the sum stops once the tail bound drops below
    ``1e-12`` of the partial sum.

    Raises
    ------
    DivergentSeriesError
        For algebraic profiles whose exponent violates
        ``dim + moment - k < -1``, and whenever the tail criterion is
        not reached within the term cap.
    """
    if dim < 1 or moment < 0:
        raise InvalidArgumentError("dim must be >= 1 and moment >= 0")
    growth = dim + moment - 1
    if weight.family == "algebraic" and not (dim + moment - weight.shape < -1.0):
        raise DivergentSeriesError(
            f"algebraic exponent {weight.shape} too small for dim={dim}, "
            f"moment={moment}: series diverges"
        )
    total = 0.0
    n = 0
    while n < MAX_SERIES_TERMS:
        cur = float(n + 1) ** growth * _profile_term(weight, n)
        total += cur
        nxt = float(n + 2) ** growth * _profile_term(weight, n + 1)
        if weight.family == "algebraic":
            # twice the integral bound covers the sum: (x+1)^g <= (2x)^g on x >= 1
            p = weight.shape - growth
            tail = 2.0**growth * (
                float(n + 1) ** -p + float(n + 1) ** (1.0 - p) / (p - 1.0)
            )
        else:
            # term ratios are decreasing, so a geometric tail applies
            ratio = nxt / cur if cur > 0.0 else 0.0
            tail = nxt / (1.0 - ratio) if ratio < 1.0 else math.inf
        if tail < _SERIES_REL_TOL * total:
            scale = 3.0**dim * amplitude
            return StabilityBound(scale * total, n + 1, scale * tail)
        n += 1
    raise DivergentSeriesError("stability series did not meet its tail criterion")


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

REPORT_COLUMNS = "N,h,q,delta,sup_error,lebesgue,slope_running"


def write_report_csv(path, report: ConvergenceReport, metadata: dict) -> None:
    """Write a convergence/Lebesgue report with a key=value comment header."""
    slopes = report.running_slopes
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(metadata):
            fh.write(f"# {key}={metadata[key]}\n")
        fh.write(f"# slope={format(report.slope, '.17g')}\n")
        fh.write(REPORT_COLUMNS + "\n")
        for lv, slope in zip(report.levels, slopes):
            row = (
                str(lv.n),
                format(lv.fill, ".17g"),
                format(lv.separation, ".17g"),
                format(lv.delta, ".17g"),
                format(lv.sup_error, ".17g"),
                format(lv.lebesgue, ".17g"),
                format(slope, ".17g"),
            )
            fh.write(",".join(row) + "\n")


def write_basis_csv(path, points, matrix, nonzeros=None) -> None:
    """Dump per-node coefficient columns over a grid, one row per point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    cols = [f"x{j}" for j in range(pts.shape[1])]
    cols += [f"a{j}" for j in range(matrix.shape[1])]
    if nonzeros is not None:
        cols.append("nonzeros")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(pts.shape[0]):
            row = [format(v, ".17g") for v in pts[i]]
            row += [format(v, ".17g") for v in matrix[i]]
            if nonzeros is not None:
                row.append(str(int(nonzeros[i])))
            fh.write(",".join(row) + "\n")
