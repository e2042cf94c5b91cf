"""Polynomial spaces on boxes: graded-lex bases, Vandermonde matrices, rank checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError
from .geometry import Domain

__all__ = [
    "BasisSpec",
    "Vandermonde",
    "UnisolvencyReport",
    "space_dimension",
    "multi_indices",
    "eval_basis",
    "vandermonde",
    "unisolvency_check",
]

FAMILIES = ("monomial", "chebyshev")

# relative pivot threshold for the numerical rank decision
RANK_TOL = 1e-10


def space_dimension(degree: int, dim: int) -> int:
    """Dimension of the total-degree polynomial space on ``dim`` variables."""
    if degree < 0 or dim < 1:
        raise InvalidArgumentError("degree must be >= 0 and dim >= 1")
    return comb(degree + dim, dim)


@lru_cache(maxsize=None)
def multi_indices(degree: int, dim: int) -> tuple:
    """All exponent tuples of total degree <= ``degree`` in graded-lex order.

    Within each total degree, earlier axes carry the higher exponents
    first, e.g. for two variables and degree 2:
    (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
    """
    if degree < 0 or dim < 1:
        raise InvalidArgumentError("degree must be >= 0 and dim >= 1")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for head in range(total, -1, -1):
            for rest in compositions(total - head, parts - 1):
                yield (head,) + rest

    out = []
    for total in range(degree + 1):
        out.extend(compositions(total, dim))
    return tuple(out)


@dataclass(frozen=True)
class BasisSpec:
    """A concrete basis of the total-degree-``degree`` polynomial space.

    Parameters
    ----------
    degree : int
    dim : int
    family : str
        "monomial" or "chebyshev" (tensor Chebyshev of the first kind on
        the box mapped to [-1, 1] per axis).
    box : Domain, optional
        Required for the chebyshev family; ignored by the monomial one.
    """

    degree: int
    dim: int
    family: str = "monomial"
    box: Domain | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"unknown basis family {self.family!r}")
        if self.degree < 0 or self.dim < 1:
            raise InvalidArgumentError("degree must be >= 0 and dim >= 1")
        if self.family == "chebyshev" and self.box is None:
            raise InvalidArgumentError("chebyshev basis needs a reference box")
        if self.box is not None and self.box.dim != self.dim:
            raise InvalidArgumentError("box dimension does not match basis dim")

    @property
    def size(self) -> int:
        return space_dimension(self.degree, self.dim)

    @property
    def exponents(self) -> tuple:
        return multi_indices(self.degree, self.dim)


def _axis_tables(spec: BasisSpec, pts: np.ndarray) -> list:
    """Per-axis tables of 1-D basis values, each of shape (n_points, degree+1)."""
    m = spec.degree
    tables = []
    for j in range(spec.dim):
        x = pts[:, j]
        if spec.family == "chebyshev":
            lo, hi = spec.box.lower[j], spec.box.upper[j]
            t = (2.0 * x - lo - hi) / (hi - lo)
        else:
            t = x
        tab = np.empty((pts.shape[0], m + 1))
        tab[:, 0] = 1.0
        if m >= 1:
            tab[:, 1] = t
        if spec.family == "chebyshev":
            for k in range(2, m + 1):
                tab[:, k] = 2.0 * t * tab[:, k - 1] - tab[:, k - 2]
        else:
            for k in range(2, m + 1):
                tab[:, k] = t * tab[:, k - 1]
        tables.append(tab)
    return tables


def eval_basis(spec: BasisSpec, points: np.ndarray) -> np.ndarray:
    """Evaluate every basis function at the given points.

    Parameters
    ----------
    spec : BasisSpec
    points : ndarray of shape (n, dim) or (dim,)

    Returns
    -------
    ndarray of shape (n, size) (or (size,) for a single point),
    columns ordered graded-lex like :func:`multi_indices`.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != spec.dim:
        raise InvalidArgumentError(
            f"points of shape {pts.shape} do not match basis dim {spec.dim}"
        )
    tables = _axis_tables(spec, pts)
    out = np.empty((pts.shape[0], spec.size))
    for col, alpha in enumerate(spec.exponents):
        acc = tables[0][:, alpha[0]].copy()
        for j in range(1, spec.dim):
            acc *= tables[j][:, alpha[j]]
        out[:, col] = acc
    return out[0] if single else out


@dataclass(frozen=True, eq=False)
class Vandermonde:
    """Collocation matrix of a basis on a node set: entry (i, j) = p_j(x_i)."""

    spec: BasisSpec
    matrix: np.ndarray

    @property
    def shape(self):
        return self.matrix.shape

    def dump_csv(self, path) -> None:
        header = ",".join(f"p{j}" for j in range(self.matrix.shape[1]))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in self.matrix:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def vandermonde(spec: BasisSpec, nodes) -> Vandermonde:
    """Collocation matrix of ``spec`` on a node set (or raw points array)."""
    pts = getattr(nodes, "points", nodes)
    mat = eval_basis(spec, np.atleast_2d(np.asarray(pts, dtype=float)))
    mat.setflags(write=False)
    return Vandermonde(spec, mat)


@dataclass(frozen=True)
class UnisolvencyReport:
    """Outcome of the numerical rank check on a collocation matrix."""

    unisolvent: bool
    rank: int
    required: int
    smallest_pivot: float
    tolerance: float


def unisolvency_check(v: Vandermonde) -> UnisolvencyReport:
    """Decide whether the node set determines the polynomial space.

    Rank is counted from the pivoted-QR diagonal; pivots below
    ``RANK_TOL`` times the largest pivot do not count.
    """
    mat = v.matrix
    required = mat.shape[1]
    r = scipy.linalg.qr(mat, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return UnisolvencyReport(False, 0, required, 0.0, 0.0)
    tol = RANK_TOL * diag[0]
    rank = int(np.count_nonzero(diag > tol))
    smallest = float(diag[min(required, diag.size) - 1]) if diag.size >= required else 0.0
    return UnisolvencyReport(rank == required, rank, required, smallest, float(tol))
