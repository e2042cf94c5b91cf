"""Command-line experiment runner.

Four subcommands drive the engines from flat ``key = value`` config files
with flag overrides:

* ``basis``     dump per-node coefficient functions on an evaluation grid
* ``converge``  sup-error refinement study with fitted slope
* ``lebesgue``  Lebesgue constants over a node-count sweep
* ``theory``    decay/stability constants implied by a weight choice

Every run is deterministic: identical config plus seed produces
byte-identical output files.  Exit codes: 0 success, 2 config error,
3 numerical failure, 4 admissibility refusal.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .analysis import (
    cone_constants,
    convergence_study,
    decay_pair,
    default_eval_counts,
    lebesgue_scan,
    stability_bound,
    write_basis_csv,
    write_report_csv,
)
from .errors import (
    AdmissibilityError,
    DivergentSeriesError,
    FdprError,
    InvalidArgumentError,
    NumericalFailureError,
    UnsupportedAngleError,
)
from .geometry import Domain, generate_grid, grid_points, perturb
from .lp import L1QuasiInterpolant
from .mls import MovingLeastSquares, Shepard
from .targets import resolve_target
from .weights import parse_weight_spec, require_admissible

__all__ = ["ExperimentConfig", "parse_config", "serialize_config", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ADMISSIBILITY = 4

ENGINES = ("mls", "shepard", "l1-cold", "l1-warm", "l1-colgen")
COMMANDS = ("basis", "converge", "lebesgue", "theory")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; every field has a config-file key.

    Keys use hyphens (``delta-factor``); fields use underscores.  String
    fields keep their raw config spelling so serialize/parse round-trips
    exactly.
    """

    command: str = "converge"
    domain: str = "-1:1"
    nodes: str = "33"
    perturb_fraction: float = 0.0
    seed: int = 0
    degree: int = 1
    basis_family: str = "chebyshev"
    weight: str = "gaussian:nu=1.0"
    delta_factor: float = 5.0
    delta_mode: str = "fill"
    engine: str = "mls"
    target: str = "sin-pi"
    grid: str = ""
    out: str = ""
    cone_angle: float = math.pi / 5.0
    cone_radius: float = 1.0
    c_qu: float = 1.0
    gamma: float = 0.5
    c_gamma: float = math.nan


def _key(name: str) -> str:
    return name.replace("_", "-")


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines (# comments, blank lines allowed)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        name = key.strip().replace("-", "_")
        if name not in _FIELD_TYPES:
            raise InvalidArgumentError(f"config line {lineno}: unknown key {key.strip()!r}")
        if name in values:
            raise InvalidArgumentError(f"config line {lineno}: duplicate key {key.strip()!r}")
        values[name] = _coerce(name, val.strip(), lineno)
    return ExperimentConfig(**values)


def _coerce(name: str, val: str, lineno: int):
    kind = _FIELD_TYPES[name]
    try:
        if kind == "int":
            return int(val)
        if kind == "float":
            return float(val)
    except ValueError as exc:
        raise InvalidArgumentError(
            f"config line {lineno}: key {_key(name)!r} needs a {kind}, got {val!r}"
        ) from exc
    return val


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config`` inverts it."""
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if f.type == "float":
            value = repr(float(value))
        lines.append(f"{_key(f.name)} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# config-field interpretation
# ---------------------------------------------------------------------------

def _parse_domain(text: str) -> Domain:
    lows, highs = [], []
    for part in text.split(","):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise InvalidArgumentError(f"domain axis {part!r} is not lo:hi")
        try:
            lows.append(float(lo))
            highs.append(float(hi))
        except ValueError as exc:
            raise InvalidArgumentError(f"bad domain bounds {part!r}") from exc
    return Domain(tuple(lows), tuple(highs))


def _parse_counts(text: str, dim: int) -> list:
    """Node-count sweep: entries like ``33`` or ``26x26``, space/comma separated."""
    out = []
    for tok in text.replace(",", " ").split():
        if "x" in tok:
            axes = tuple(int(p) for p in tok.split("x"))
            if len(axes) != dim:
                raise InvalidArgumentError(
                    f"count {tok!r} has {len(axes)} axes for a {dim}-D domain"
                )
            out.append(axes)
        else:
            out.append(int(tok))
    if not out:
        raise InvalidArgumentError("empty node-count list")
    return out


def _parse_grid(text: str, dim: int) -> tuple:
    if not text:
        return default_eval_counts(dim)
    counts = _parse_counts(text, dim)
    if len(counts) != 1:
        raise InvalidArgumentError("eval grid takes a single resolution entry")
    c = counts[0]
    return c if isinstance(c, tuple) else (c,) * dim


def _method_name(engine: str) -> str:
    return "mls" if engine in ("mls", "shepard") else "one-norm"


def build_engine(config: ExperimentConfig, domain: Domain):
    """Estimator for the configured engine, admissibility-checked."""
    if config.engine not in ENGINES:
        raise InvalidArgumentError(f"unknown engine {config.engine!r}")
    degree = 0 if config.engine == "shepard" else config.degree
    if config.engine == "shepard" and config.degree != 0:
        raise InvalidArgumentError("the shepard engine requires degree 0")
    spec = parse_weight_spec(config.weight)
    require_admissible(spec, domain.dim, degree, _method_name(config.engine))
    common = dict(
        weight=config.weight,
        delta_factor=config.delta_factor,
        delta_mode=config.delta_mode,
        basis=config.basis_family,
        domain=domain,
    )
    if config.engine == "mls":
        return MovingLeastSquares(degree=config.degree, **common)
    if config.engine == "shepard":
        return Shepard(**common)
    strategy = config.engine.split("-", 1)[1]
    return L1QuasiInterpolant(degree=config.degree, strategy=strategy, **common)


def _metadata(config: ExperimentConfig) -> dict:
    return {_key(f.name): getattr(config, f.name) for f in fields(ExperimentConfig)}


def _default_out(config: ExperimentConfig) -> str:
    return config.out or f"fdpr-{config.command}.csv"


def _level_nodes(config: ExperimentConfig, domain: Domain, counts):
    nodes = generate_grid(domain, counts)
    if config.perturb_fraction > 0.0:
        nodes = perturb(nodes, config.perturb_fraction, config.seed)
    return nodes


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def run_basis_dump(config: ExperimentConfig) -> str:
    """Dump each node's coefficient function on the eval grid to CSV."""
    domain = _parse_domain(config.domain)
    counts = _parse_counts(config.nodes, domain.dim)[0]
    nodes = _level_nodes(config, domain, counts)
    f = resolve_target(config.target, domain.dim)
    engine = build_engine(config, domain)
    engine.fit(nodes, f(nodes.points))
    pts = grid_points(domain, _parse_grid(config.grid, domain.dim))
    sweep = engine.sweep(pts, need_matrix=True)
    if getattr(sweep, "failures", ()):
        raise NumericalFailureError(f"{len(sweep.failures)} grid points failed")
    nonzeros = getattr(sweep, "nonzeros", None)
    out = _default_out(config)
    write_basis_csv(out, pts, sweep.matrix, nonzeros)
    print(f"basis: {nodes.n} nodes, {pts.shape[0]} grid points -> {out}")
    return out


def run_convergence(config: ExperimentConfig) -> str:
    """Refinement study CSV with per-level errors and the fitted slope."""
    domain = _parse_domain(config.domain)
    counts = _parse_counts(config.nodes, domain.dim)
    f = resolve_target(config.target, domain.dim)
    prototype = build_engine(config, domain)
    report = convergence_study(
        prototype,
        f,
        domain,
        counts,
        eval_counts=_parse_grid(config.grid, domain.dim),
        perturb_fraction=config.perturb_fraction,
        seed=config.seed,
    )
    out = _default_out(config)
    write_report_csv(out, report, _metadata(config))
    for lv in report.levels:
        print(f"N={lv.n} sup_error={lv.sup_error:.6e} lebesgue={lv.lebesgue:.6f}")
    slope = "n/a (noise floor)" if report.noise_floor else f"{report.slope:.4f}"
    print(f"slope={slope} -> {out}")
    return out


def run_lebesgue(config: ExperimentConfig) -> str:
    """Lebesgue constants across the node-count sweep, one CSV row each."""
    domain = _parse_domain(config.domain)
    counts = _parse_counts(config.nodes, domain.dim)
    eval_pts = grid_points(domain, _parse_grid(config.grid, domain.dim))
    rows = []
    for level in counts:
        nodes = _level_nodes(config, domain, level)
        engine = build_engine(config, domain)
        engine.fit(nodes, np.zeros(nodes.n))
        scan = lebesgue_scan(engine, eval_pts)
        if not scan.certified:
            raise NumericalFailureError(
                f"{len(scan.failures)} grid points failed at n={nodes.n}"
            )
        rows.append((nodes.n, nodes.fill_estimate, nodes.separation,
                     engine.delta_, scan.constant))
        print(f"N={nodes.n} lebesgue={scan.constant:.6f}")
    out = _default_out(config)
    meta = _metadata(config)
    with open(out, "w", encoding="utf-8") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}={meta[key]}\n")
        fh.write("N,h,q,delta,lebesgue\n")
        for n, h, q, delta, const in rows:
            fh.write(f"{n},{h:.17g},{q:.17g},{delta:.17g},{const:.17g}\n")
    print(f"-> {out}")
    return out


def run_theory(config: ExperimentConfig) -> str:
    """Report the decay/stability constants for the configured weight."""
    domain = _parse_domain(config.domain)
    spec = parse_weight_spec(config.weight)
    method = _method_name(config.engine)
    degree = 0 if config.engine == "shepard" else config.degree
    constants = cone_constants(config.cone_angle, config.cone_radius, degree)
    c_gamma = config.c_gamma
    if math.isnan(c_gamma):
        c_gamma = config.delta_factor
    bound = decay_pair(constants, spec, method, config.c_qu,
                       gamma=config.gamma, c_gamma=c_gamma)
    stability = stability_bound(bound.amplitude, bound.profile, domain.dim)
    lines = [
        f"cone-angle = {constants.cone_angle!r}",
        f"cone-radius = {constants.cone_radius!r}",
        f"degree = {degree}",
        f"c1 = {constants.c1!r}",
        f"c2 = {constants.c2!r}",
        f"h0 = {constants.h0!r}",
        f"method = {method}",
        f"decay-amplitude = {bound.amplitude!r}",
        f"decay-profile = {bound.profile.family}:{bound.profile.shape!r}",
        f"series-terms = {stability.terms}",
        f"series-tail-bound = {stability.tail_bound!r}",
        f"lebesgue-bound = {stability.value!r}",
    ]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return config.out


_RUNNERS = {
    "basis": run_basis_dump,
    "converge": run_convergence,
    "lebesgue": run_lebesgue,
    "theory": run_theory,
}


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdpr",
        description="Polynomial-reproduction experiment runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in _RUNNERS.items():
        p = sub.add_parser(name, help=runner.__doc__.splitlines()[0])
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--engine", choices=ENGINES)
        p.add_argument("--degree", type=int)
        p.add_argument("--weight", help="family:param string, e.g. gaussian:nu=1.0")
        p.add_argument("--delta-factor", type=float, dest="delta_factor")
        p.add_argument("--nodes", help="node-count sweep, e.g. '9 17 33' or '26x26'")
        p.add_argument("--seed", type=int)
        p.add_argument("--grid", help="eval-grid resolution, e.g. '201' or '80x80'")
        p.add_argument("--out", help="output CSV path")
    return parser


_OVERRIDE_FIELDS = ("engine", "degree", "weight", "delta_factor", "nodes", "seed", "grid", "out")


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """File config (if any) with CLI-flag overrides applied."""
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                config = parse_config(fh.read())
        except OSError as exc:
            raise InvalidArgumentError(f"cannot read config {args.config!r}: {exc}") from exc
    else:
        config = ExperimentConfig()
    config = replace(config, command=args.command)
    overrides = {
        name: getattr(args, name)
        for name in _OVERRIDE_FIELDS
        if getattr(args, name, None) is not None
    }
    return replace(config, **overrides)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        _RUNNERS[config.command](config)
    except (AdmissibilityError, DivergentSeriesError) as exc:
        print(f"fdpr: admissibility refusal: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except (InvalidArgumentError, UnsupportedAngleError) as exc:
        print(f"fdpr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FdprError as exc:
        print(f"fdpr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
