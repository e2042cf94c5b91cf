"""Node-set geometry: domains, grids, separation/fill estimates, delta scaling.

The quantities computed here feed every engine: the separation radius sets
the scale of divergent weight families, the fill-distance estimate sets the
localization length ``delta``, and their ratio measures quasi-uniformity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError

__all__ = [
    "Domain",
    "NodeSet",
    "DeltaRule",
    "generate_grid",
    "grid_points",
    "node_set",
    "perturb",
    "separation_radius",
    "fill_distance",
    "quasi_uniformity",
    "scale_delta",
    "write_nodes_csv",
    "read_nodes_csv",
]


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box, the approximation domain.

    Parameters
    ----------
    lower, upper : tuple of float
        Per-axis bounds, ``lower[j] < upper[j]``.
    """

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi) or not lo:
            raise InvalidArgumentError("domain bounds must be non-empty and of equal length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise InvalidArgumentError(f"degenerate domain: lower={lo}, upper={hi}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> bool:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.asarray(self.lower) - tol
        hi = np.asarray(self.upper) + tol
        return bool(np.all(pts >= lo) and np.all(pts <= hi))


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Immutable set of pairwise-distinct nodes with cached geometry.

    Attributes
    ----------
    domain : Domain
        Box the nodes live in (and the region fill distance is measured over).
    points : ndarray of shape (n, dim)
        Node coordinates; the array is read-only.
    separation : float
        Half the minimum pairwise distance.
    fill_estimate : float
        Probe-grid estimate of the fill distance over ``domain``.
    axis_counts : tuple of int or None
        Per-axis counts when the set was built as a tensor grid, else None.
    """

    domain: Domain
    points: np.ndarray
    separation: float
    fill_estimate: float
    axis_counts: tuple | None = None

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def uniformity(self) -> float:
        """Quasi-uniformity ratio: fill estimate over separation radius."""
        return self.fill_estimate / self.separation

    def __repr__(self):  # keep array noise out of logs
        return (
            f"NodeSet(n={self.n}, dim={self.dim}, separation={self.separation:.6g}, "
            f"fill={self.fill_estimate:.6g})"
        )


@dataclass(frozen=True)
class DeltaRule:
    """Localization-length rule: ``delta = factor * (fill or separation)``."""

    mode: str = "fill"
    factor: float = 5.0

    def __post_init__(self):
        if self.mode not in ("fill", "separation"):
            raise InvalidArgumentError(f"unknown delta mode {self.mode!r}")
        if not (self.factor > 0):
            raise InvalidArgumentError("delta factor must be positive")


def separation_radius(points: np.ndarray) -> float:
    """Half the minimum pairwise distance of a point set.

    Parameters
    ----------
    points : ndarray of shape (n, dim)
        At least two pairwise-distinct points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise InvalidArgumentError("separation radius needs at least two points")
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].min()) / 2.0


def _default_probe_counts(domain: Domain, n_points: int, axis_counts) -> tuple:
    if axis_counts is not None:
        base = axis_counts
    else:
        per_axis = max(2, round(n_points ** (1.0 / domain.dim)))
        base = (per_axis,) * domain.dim
    # 8x refinement per axis; the +1 keeps endpoints and (for even
    # subdivision) every Voronoi-far point of an equispaced grid on the probe.
    return tuple(8 * max(c - 1, 1) + 1 for c in base)


def fill_distance(nodes: "NodeSet", probe_per_axis=None) -> float:
    """Estimate the fill distance of ``nodes`` over its domain.

    The domain is sampled with a dense probe grid and the largest
    nearest-node distance over the probe is returned.  The estimate is a
    lower bound on the true fill distance; it is exact for equispaced
    grids whose Voronoi-far points land on the probe (the default
    resolution guarantees that).

    Parameters
    ----------
    nodes : NodeSet
    probe_per_axis : int or sequence of int, optional
        Probe-grid resolution per axis; must be at least the node count
        per axis.  Defaults to 8x the node resolution.
    """
    domain = nodes.domain
    if probe_per_axis is None:
        counts = _default_probe_counts(domain, nodes.n, nodes.axis_counts)
    else:
        if np.isscalar(probe_per_axis):
            counts = (int(probe_per_axis),) * domain.dim
        else:
            counts = tuple(int(c) for c in probe_per_axis)
        if len(counts) != domain.dim or any(c < 2 for c in counts):
            raise InvalidArgumentError("probe resolution must be >= 2 per axis")
        if nodes.axis_counts is not None and any(
            c < nc for c, nc in zip(counts, nodes.axis_counts)
        ):
            raise InvalidArgumentError("probe resolution below node resolution")
    probe = grid_points(domain, counts)
    dist, _ = cKDTree(nodes.points).query(probe)
    return float(dist.max())


def quasi_uniformity(nodes: "NodeSet") -> float:
    """Fill-distance over separation-radius ratio (>= 1 asymptotically)."""
    return nodes.uniformity


def scale_delta(rule: DeltaRule, nodes: "NodeSet") -> float:
    """Resolve a delta rule against a node set's cached geometry."""
    base = nodes.fill_estimate if rule.mode == "fill" else nodes.separation
    return rule.factor * base


def node_set(domain: Domain, points: np.ndarray, axis_counts=None,
             probe_per_axis=None) -> NodeSet:
    """Build a NodeSet from raw coordinates, computing cached geometry.

    Raises
    ------
    InvalidArgumentError
        If points fall outside the domain or are not pairwise distinct.
    """
    pts = np.array(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] != domain.dim:
        raise InvalidArgumentError(
            f"points of shape {pts.shape} do not match domain dim {domain.dim}"
        )
    if pts.shape[0] < 2:
        raise InvalidArgumentError("a node set needs at least two nodes")
    if not domain.contains(pts):
        raise InvalidArgumentError("nodes fall outside the domain")
    sep = separation_radius(pts)
    if sep <= 1e-14 * max(domain.diameter, 1.0):
        raise InvalidArgumentError("nodes are not pairwise distinct")
    pts.setflags(write=False)
    if axis_counts is not None:
        axis_counts = tuple(int(c) for c in axis_counts)
    stub = NodeSet(domain, pts, sep, math.nan, axis_counts)
    fill = fill_distance(stub, probe_per_axis)
    return NodeSet(domain, pts, sep, fill, axis_counts)


def grid_points(domain: Domain, counts) -> np.ndarray:
    """Row-major equispaced tensor grid over ``domain``.

    The last axis varies fastest, so consecutive rows are spatial
    neighbors (which warm-started sweeps rely on).
    """
    if np.isscalar(counts):
        counts = (int(counts),) * domain.dim
    else:
        counts = tuple(int(c) for c in counts)
    if len(counts) != domain.dim:
        raise InvalidArgumentError("one count per axis required")
    if any(c < 2 for c in counts):
        raise InvalidArgumentError("grid counts must be >= 2")
    axes = [
        np.linspace(lo, hi, c)
        for lo, hi, c in zip(domain.lower, domain.upper, counts)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def generate_grid(domain: Domain, counts) -> NodeSet:
    """Equispaced tensor-grid node set with endpoints included."""
    if np.isscalar(counts):
        counts = (int(counts),) * domain.dim
    pts = grid_points(domain, counts)
    return node_set(domain, pts, axis_counts=counts)


def perturb(nodes: NodeSet, fraction: float, seed: int) -> NodeSet:
    """Randomly shift interior grid coordinates by up to ``fraction`` spacing.

    Coordinates sitting on the domain boundary stay fixed, so the
    perturbed set still covers the box.  ``fraction < 1/2`` keeps nodes
    pairwise distinct.

    Parameters
    ----------
    nodes : NodeSet
        Must have been built by :func:`generate_grid`.
    fraction : float
        Uniform noise amplitude as a fraction of the grid spacing, in [0, 1/2).
    seed : int
        Seed for the deterministic generator.
    """
    if nodes.axis_counts is None:
        raise InvalidArgumentError("perturb requires a tensor-grid node set")
    if not (0.0 <= fraction < 0.5):
        raise InvalidArgumentError("perturbation fraction must lie in [0, 1/2)")
    domain = nodes.domain
    lo = np.asarray(domain.lower)
    hi = np.asarray(domain.upper)
    spacing = np.array([
        (h - l) / (c - 1) if c > 1 else 0.0
        for l, h, c in zip(domain.lower, domain.upper, nodes.axis_counts)
    ])
    rng = np.random.default_rng(seed)
    for _ in range(64):
        pts = np.array(nodes.points, dtype=float)
        interior = (pts > lo + 1e-14) & (pts < hi - 1e-14)
        noise = rng.uniform(-fraction, fraction, size=pts.shape) * spacing
        pts = pts + np.where(interior, noise, 0.0)
        np.clip(pts, lo, hi, out=pts)
        try:
            return node_set(domain, pts, axis_counts=None)
        except InvalidArgumentError:
            continue
    raise InvalidArgumentError("could not draw a distinct perturbed node set")


def write_nodes_csv(nodes: NodeSet, path) -> None:
    """Serialize node coordinates to CSV with an ``x0,...`` header."""
    header = ",".join(f"x{j}" for j in range(nodes.dim))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in nodes.points:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def read_nodes_csv(path, domain: Domain | None = None) -> NodeSet:
    """Load a node set written by :func:`write_nodes_csv`.

    If no domain is given, the bounding box of the points is used.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if not all(c.strip().startswith("x") for c in cols):
            raise InvalidArgumentError(f"unrecognized node CSV header: {header!r}")
        pts = np.loadtxt(fh, delimiter=",", ndmin=2)
    if pts.shape[1] != len(cols):
        raise InvalidArgumentError("node CSV row width does not match header")
    if domain is None:
        domain = Domain(tuple(pts.min(axis=0)), tuple(pts.max(axis=0)))
    return node_set(domain, pts)
