"""Decay-profile weight families and their admissibility rules.

Three radial profiles are supported, each evaluated on distances divided
by a scale:

* gaussian      ``exp(-nu * t**2)``
* exponential   ``exp(-nu * t)``
* algebraic     ``t**(-k)``  (divergent at zero)

Values are clamped to ``[WEIGHT_FLOOR, WEIGHT_CEIL]`` so reciprocal
objectives stay finite in either direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, DivergentAtZeroError, InvalidArgumentError

__all__ = [
    "WeightSpec",
    "AdmissibilityReport",
    "phi",
    "eval_weight",
    "admissibility_report",
    "parse_weight_spec",
    "format_weight_spec",
    "WEIGHT_FLOOR",
    "WEIGHT_CEIL",
]

WEIGHT_FLOOR = 1e-300
WEIGHT_CEIL = 1e300

_FAMILIES = ("gaussian", "exponential", "algebraic")
_SCALE_SOURCES = ("delta", "separation")


def _default_scale_source(family: str) -> str:
    return "separation" if family == "algebraic" else "delta"


@dataclass(frozen=True)
class WeightSpec:
    """One weight family with its shape parameter and scale source.

    Parameters
    ----------
    family : str
        "gaussian", "exponential" or "algebraic".
    shape : float
        Decay rate ``nu`` for the exponential families, exponent ``k``
        for the algebraic one.  Must be positive.
    scale_source : str, optional
        Which length the distances are divided by: "delta" (the
        localization length) or "separation" (the separation radius).
        Defaults to "delta" for gaussian/exponential and "separation"
        for algebraic.
    """

    family: str
    shape: float
    scale_source: str = ""

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidArgumentError(f"unknown weight family {self.family!r}")
        if not (self.shape > 0) or not math.isfinite(self.shape):
            raise InvalidArgumentError("weight shape parameter must be positive and finite")
        src = self.scale_source or _default_scale_source(self.family)
        if src not in _SCALE_SOURCES:
            raise InvalidArgumentError(f"unknown scale source {src!r}")
        object.__setattr__(self, "scale_source", src)

    @property
    def divergent_at_zero(self) -> bool:
        """True for profiles that blow up as t -> 0 (the algebraic family)."""
        return self.family == "algebraic"

    @property
    def passes_ratio_test(self) -> bool:
        """Whether phi(n+1)/phi(n) has a limit strictly below one.

        Gaussian and exponential profiles do; the algebraic family does
        not (its ratio tends to one), so series built on it converge only
        with an exponent margin.
        """
        return self.family != "algebraic"


def phi(spec: WeightSpec, t):
    """Evaluate the decay profile at nonnegative ``t`` (scalar or array).

    Raises
    ------
    DivergentAtZeroError
        For the algebraic family at t == 0; callers apply the cardinal
        snap rule instead of evaluating there.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise InvalidArgumentError("profile argument must be nonnegative")
    if spec.family == "gaussian":
        out = np.exp(-spec.shape * arr * arr)
    elif spec.family == "exponential":
        out = np.exp(-spec.shape * arr)
    else:
        if np.any(arr == 0.0):
            raise DivergentAtZeroError(
                "algebraic weight evaluated at zero distance"
            )
        # t**(-k) overflows float64 for t below ~1e-48 at typical k; the
        # clip below turns that inf into WEIGHT_CEIL, so silence the warning
        with np.errstate(over="ignore"):
            out = arr ** (-spec.shape)
    out = np.clip(out, WEIGHT_FLOOR, WEIGHT_CEIL)
    return float(out) if np.isscalar(t) or arr.ndim == 0 else out


def eval_weight(spec: WeightSpec, x, y, scale: float):
    """Weight between points: ``phi(||x - y|| / scale)``.

    ``x`` and ``y`` may be single points or broadcastable stacks of
    points of matching dimension.
    """
    if not (scale > 0) or not math.isfinite(scale):
        raise InvalidArgumentError("weight scale must be positive and finite")
    dx = np.atleast_2d(np.asarray(x, dtype=float)) - np.atleast_2d(np.asarray(y, dtype=float))
    dist = np.linalg.norm(dx, axis=-1)
    out = phi(spec, dist / scale)
    arr = np.asarray(out)
    return float(arr.reshape(-1)[0]) if arr.size == 1 else arr


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the exponent test for an engine/weight combination.

    ``margin`` is how far below the critical threshold the decay
    exponent sits; negative margins are inadmissible.
    """

    admissible: bool
    margin: float
    method: str
    detail: str = ""


def admissibility_report(spec: WeightSpec, dim: int, degree: int, method: str) -> AdmissibilityReport:
    """Check that the weight decays fast enough for the requested engine.

    For the algebraic family, the moving-least-squares engine needs
    ``dim + degree - k/2 < -1`` and the one-norm engine needs
    ``dim + degree - k < -1``.  Gaussian and exponential weights always
    qualify.

    Parameters
    ----------
    method : str
        "mls" or "one-norm".
    """
    if method not in ("mls", "one-norm"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    if dim < 1 or degree < 0:
        raise InvalidArgumentError("dim must be >= 1 and degree >= 0")
    if spec.family != "algebraic":
        return AdmissibilityReport(True, math.inf, method, "super-algebraic decay")
    effective = spec.shape / 2.0 if method == "mls" else spec.shape
    margin = -1.0 - (dim + degree - effective)
    return AdmissibilityReport(
        margin > 0,
        margin,
        method,
        f"requires dim+degree-{'k/2' if method == 'mls' else 'k'} < -1",
    )


def require_admissible(spec: WeightSpec, dim: int, degree: int, method: str) -> None:
    rep = admissibility_report(spec, dim, degree, method)
    if not rep.admissible:
        raise AdmissibilityError(
            f"algebraic exponent {spec.shape} inadmissible for {method} at "
            f"dim={dim}, degree={degree} (margin {rep.margin:.3g})"
        )


def parse_weight_spec(text: str) -> WeightSpec:
    """Parse a config string like ``gaussian:nu=1`` or ``algebraic:k=3.1``.

    An optional ``,scale=delta`` / ``,scale=separation`` suffix overrides
    the family's default scale source.
    """
    parts = text.strip().split(":")
    if len(parts) != 2 or not parts[1]:
        raise InvalidArgumentError(f"malformed weight spec {text!r}")
    family = parts[0].strip().lower()
    shape = None
    scale_source = ""
    for item in parts[1].split(","):
        if "=" not in item:
            raise InvalidArgumentError(f"malformed weight parameter {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key in ("nu", "k"):
            expected = "k" if family == "algebraic" else "nu"
            if key != expected:
                raise InvalidArgumentError(
                    f"weight family {family!r} takes parameter {expected!r}, got {key!r}"
                )
            try:
                shape = float(value)
            except ValueError as exc:
                raise InvalidArgumentError(f"bad weight parameter value {value!r}") from exc
        elif key == "scale":
            scale_source = value
        else:
            raise InvalidArgumentError(f"unknown weight parameter {key!r}")
    if shape is None:
        raise InvalidArgumentError(f"weight spec {text!r} is missing its shape parameter")
    return WeightSpec(family, shape, scale_source)


def format_weight_spec(spec: WeightSpec) -> str:
    """Canonical config string; inverse of :func:`parse_weight_spec`."""
    key = "k" if spec.family == "algebraic" else "nu"
    out = f"{spec.family}:{key}={spec.shape!r}"
    if spec.scale_source != _default_scale_source(spec.family):
        out += f",scale={spec.scale_source}"
    return out
