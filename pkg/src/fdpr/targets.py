"""Built-in target functions for convergence and error studies."""

from __future__ import annotations

import numpy as np

from .basis import BasisSpec, eval_basis, multi_indices, space_dimension
from .errors import InvalidArgumentError

__all__ = ["sin_pi", "franke", "polynomial_target", "resolve_target"]


def sin_pi(points):
    """sin(pi * x) on the first coordinate."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.sin(np.pi * pts[:, 0])


def franke(points):
    """Franke's four-bump benchmark surface on the unit square."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    return (
        0.75 * np.exp(-((9 * x - 2) ** 2 + (9 * y - 2) ** 2) / 4.0)
        + 0.75 * np.exp(-((9 * x + 1) ** 2) / 49.0 - (9 * y + 1) / 10.0)
        + 0.5 * np.exp(-((9 * x - 7) ** 2 + (9 * y - 3) ** 2) / 4.0)
        - 0.2 * np.exp(-((9 * x - 4) ** 2) - (9 * y - 7) ** 2)
    )


def polynomial_target(coeffs, dim: int):
    """Polynomial with monomial coefficients listed in graded-lex order.

    The degree is the smallest one whose space holds all coefficients;
    the list may be shorter than a full space (missing tails are zero).
    """
    coeffs = np.asarray(list(coeffs), dtype=float)
    if coeffs.size == 0:
        raise InvalidArgumentError("polynomial target needs at least one coefficient")
    degree = 0
    while space_dimension(degree, dim) < coeffs.size:
        degree += 1
    full = np.zeros(space_dimension(degree, dim))
    full[: coeffs.size] = coeffs
    spec = BasisSpec(degree, dim, "monomial")

    def evaluate(points):
        return eval_basis(spec, np.atleast_2d(np.asarray(points, dtype=float))) @ full

    evaluate.degree = degree
    return evaluate


def resolve_target(name: str, dim: int):
    """Map a config string to a callable target function."""
    name = name.strip()
    if name == "sin-pi":
        return sin_pi
    if name == "franke":
        if dim != 2:
            raise InvalidArgumentError("franke target is two-dimensional")
        return franke
    if name.startswith("polynomial:"):
        body = name.split(":", 1)[1]
        try:
            coeffs = [float(v) for v in body.split(",") if v.strip()]
        except ValueError as exc:
            raise InvalidArgumentError(f"bad polynomial coefficients {body!r}") from exc
        return polynomial_target(coeffs, dim)
    raise InvalidArgumentError(f"unknown target {name!r}")
