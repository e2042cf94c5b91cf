"""Fit-time plumbing shared by the engine estimators."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.utils.validation import check_array

from .basis import BasisSpec, unisolvency_check, vandermonde
from .errors import InvalidArgumentError
from .geometry import DeltaRule, Domain, NodeSet, node_set, scale_delta
from .weights import WeightSpec, parse_weight_spec

THREADS_ENV = "FDPR_THREADS"

# Once normalized far weights drop below this floor they carry no
# information in double precision, so divergent families snap to the
# nearest node's cardinal vector instead of solving.
DIVERGENT_FLOOR = 1e-30


def worker_count() -> int:
    """Worker cap from the FDPR_THREADS environment variable (default 1)."""
    raw = os.environ.get(THREADS_ENV, "")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return max(1, value)


def map_chunks(fn, chunks, workers: int | None = None):
    """Apply ``fn`` to index chunks, optionally on a thread pool, in order."""
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def coerce_domain(domain) -> Domain | None:
    if domain is None or isinstance(domain, Domain):
        return domain
    lower, upper = domain
    if np.isscalar(lower):
        lower, upper = (lower,), (upper,)
    return Domain(tuple(lower), tuple(upper))


def as_point_block(points, dim: int) -> np.ndarray:
    """Validate evaluation points against the fitted dimension."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if dim == 1 else pts[None, :]
    pts = check_array(pts, ensure_2d=True, dtype=float)
    if pts.shape[1] != dim:
        raise InvalidArgumentError(
            f"evaluation points have dim {pts.shape[1]}, model has dim {dim}"
        )
    return pts


@dataclass(frozen=True, eq=False)
class FittedCore:
    """Geometry, basis and weight state shared by the engines after fit."""

    nodes: NodeSet
    basis: BasisSpec
    collocation: np.ndarray  # (n, size) basis values on the nodes
    weight: WeightSpec
    delta: float
    scale: float
    unisolvent: bool
    unisolvency_pivot: float


def prepare_core(X, *, degree, weight, delta_factor, delta_mode, basis_family,
                 domain) -> FittedCore:
    """Validate inputs and assemble the fit-time state.

    ``X`` may be a NodeSet (used as-is) or an (n, dim) coordinate array;
    in the latter case the domain defaults to the bounding box.
    """
    if isinstance(X, NodeSet):
        nodes = X
    else:
        arr = check_array(np.asarray(X, dtype=float), ensure_2d=False, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        dom = coerce_domain(domain)
        if dom is None:
            dom = Domain(tuple(arr.min(axis=0)), tuple(arr.max(axis=0)))
        nodes = node_set(dom, arr)

    if isinstance(weight, WeightSpec):
        wspec = weight
    else:
        wspec = parse_weight_spec(weight)

    spec = BasisSpec(int(degree), nodes.dim, basis_family, box=nodes.domain)
    if nodes.n < spec.size:
        raise InvalidArgumentError(
            f"{nodes.n} nodes cannot determine a {spec.size}-dimensional polynomial space"
        )
    v = vandermonde(spec, nodes)
    report = unisolvency_check(v)

    rule = DeltaRule(delta_mode, float(delta_factor))
    delta = scale_delta(rule, nodes)
    scale = delta if wspec.scale_source == "delta" else nodes.separation
    if not (scale > 0 and math.isfinite(scale)):
        raise InvalidArgumentError(f"resolved weight scale {scale} is not usable")

    return FittedCore(nodes, spec, v.matrix, wspec, delta, scale,
                      report.unisolvent, report.smallest_pivot)


def divergent_snap_radius(weight: WeightSpec, scale: float, snap_rel: float) -> float:
    """Distance below which a divergent weight snaps to the cardinal vector.

    The documented rule is ``snap_rel * scale``; on top of that, any
    distance whose normalized far weights would underflow past
    ``DIVERGENT_FLOOR`` snaps too, since the solve would see a rank-one
    system anyway.
    """
    if not weight.divergent_at_zero:
        return 0.0
    info_radius = scale * DIVERGENT_FLOOR ** (1.0 / weight.shape)
    return max(snap_rel * scale, info_radius)
