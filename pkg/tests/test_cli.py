"""End-to-end runs of the command-line front end."""

import math

import numpy as np
import pytest

import fdpr.cli as cli
from fdpr.analysis import cone_constants, decay_pair, stability_bound
from fdpr.cli import (
    ExperimentConfig,
    main,
    parse_config,
    serialize_config,
)
from fdpr.errors import InvalidArgumentError, NumericalFailureError
from fdpr.geometry import Domain, generate_grid, perturb
from fdpr.weights import parse_weight_spec


def read_table(path):
    """CSV body (skipping # metadata) as a list of string rows."""
    rows = []
    header = None
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return header, rows


def test_config_roundtrip_is_identity():
    default = ExperimentConfig()
    # the default c_gamma is nan, so compare canonical text, not dataclasses
    assert serialize_config(parse_config(serialize_config(default))) == serialize_config(default)
    custom = ExperimentConfig(
        command="lebesgue", domain="0:1,0:1", nodes="13x13 15x15",
        perturb_fraction=0.25, seed=9, degree=2, weight="algebraic:k=6.2",
        delta_factor=2.5, engine="l1-colgen", target="franke", grid="40x40",
        out="x.csv", c_gamma=3.0,
    )
    assert parse_config(serialize_config(custom)) == custom
    # serialization is stable, not just invertible
    assert serialize_config(parse_config(serialize_config(custom))) == serialize_config(custom)


def test_parse_config_accepts_comments_and_hyphen_keys():
    cfg = parse_config(
        "# comment\n"
        "\n"
        "delta-factor = 3.5\n"
        "perturb-fraction = 0.1\n"
        "engine = shepard\n"
    )
    assert cfg.delta_factor == 3.5
    assert cfg.perturb_fraction == 0.1
    assert cfg.engine == "shepard"


def test_parse_config_line_precise_errors():
    with pytest.raises(InvalidArgumentError, match="line 2"):
        parse_config("engine = mls\nunknown-key = 3\n")
    with pytest.raises(InvalidArgumentError, match="duplicate"):
        parse_config("seed = 1\nseed = 2\n")
    with pytest.raises(InvalidArgumentError, match="line 1"):
        parse_config("seed = one\n")
    with pytest.raises(InvalidArgumentError, match="key = value"):
        parse_config("just words\n")


def test_domain_and_count_parsing():
    dom = cli._parse_domain("0:1,-2:3")
    assert dom.lower == (0.0, -2.0) and dom.upper == (1.0, 3.0)
    with pytest.raises(InvalidArgumentError):
        cli._parse_domain("0,1")
    assert cli._parse_counts("9 17 33", 1) == [9, 17, 33]
    assert cli._parse_counts("26x26, 27x27", 2) == [(26, 26), (27, 27)]
    with pytest.raises(InvalidArgumentError):
        cli._parse_counts("26x26", 1)
    with pytest.raises(InvalidArgumentError):
        cli._parse_counts("", 1)
    assert cli._parse_grid("", 2) == (101, 101)
    assert cli._parse_grid("80x80", 2) == (80, 80)
    assert cli._parse_grid("201", 1) == (201,)
    with pytest.raises(InvalidArgumentError):
        cli._parse_grid("9 17", 1)


def test_converge_run_is_byte_deterministic(tmp_path, monkeypatch):
    for sub in ("one", "two"):
        d = tmp_path / sub
        d.mkdir()
        monkeypatch.chdir(d)
        code = main([
            "converge", "--nodes", "5 9", "--grid", "51", "--out", "report.csv",
        ])
        assert code == 0
    first = (tmp_path / "one" / "report.csv").read_bytes()
    second = (tmp_path / "two" / "report.csv").read_bytes()
    assert first == second
    header, rows = read_table(tmp_path / "one" / "report.csv")
    assert header == "N,h,q,delta,sup_error,lebesgue,slope_running".split(",")
    assert [r[0] for r in rows] == ["5", "9"]
    assert float(rows[1][4]) < float(rows[0][4])


def test_flag_overrides_beat_the_config_file(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nodes = 5\nseed = 3\ngrid = 41\nout = a.csv\n")
    code = main(["converge", "--config", str(cfg), "--nodes", "9", "--out", "b.csv"])
    assert code == 0
    _, rows = read_table(tmp_path / "b.csv")
    assert rows[0][0] == "9"
    meta = (tmp_path / "b.csv").read_text()
    assert "# seed=3" in meta  # untouched config fields survive


def test_basis_dump_partition_of_unity_and_reproduction(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "basis.cfg"
    cfg.write_text(
        "command = basis\n"
        "nodes = 5\n"
        "perturb-fraction = 0.3\n"
        "seed = 2\n"
        "engine = shepard\n"
        "degree = 0\n"
        "grid = 41\n"
        "out = shepard.csv\n"
    )
    assert main(["basis", "--config", str(cfg)]) == 0
    header, rows = read_table(tmp_path / "shepard.csv")
    assert header == ["x0", "a0", "a1", "a2", "a3", "a4"]
    table = np.array([[float(v) for v in r] for r in rows])
    np.testing.assert_allclose(table[:, 1:].sum(axis=1), 1.0, atol=1e-12)

    # degree 4 on 5 nodes pins the coefficients completely: the dump
    # must reproduce the identity function through the node coordinates
    assert main([
        "basis", "--config", str(cfg),
        "--engine", "mls", "--degree", "4", "--out", "m4.csv",
    ]) == 0
    nodes = perturb(generate_grid(Domain((-1.0,), (1.0,)), 5), 0.3, seed=2)
    _, rows = read_table(tmp_path / "m4.csv")
    table = np.array([[float(v) for v in r] for r in rows])
    np.testing.assert_allclose(table[:, 1:].sum(axis=1), 1.0, atol=1e-9)
    recovered = table[:, 1:] @ nodes.points[:, 0]
    np.testing.assert_allclose(recovered, table[:, 0], atol=1e-8)


def test_basis_dump_lp_nonzero_counts(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = main([
        "basis", "--engine", "l1-cold", "--degree", "2",
        "--nodes", "5x5", "--grid", "7x7", "--out", "lp.csv",
        "--config", str(write_2d_config(tmp_path)),
    ])
    assert code == 0
    header, rows = read_table(tmp_path / "lp.csv")
    assert header[-1] == "nonzeros"
    counts = [int(r[-1]) for r in rows]
    assert max(counts) <= 6  # space dimension of degree 2 in the plane


def write_2d_config(tmp_path):
    cfg = tmp_path / "plane.cfg"
    cfg.write_text("domain = 0:1,0:1\ntarget = franke\n")
    return cfg


def test_lebesgue_run_shepard_is_one(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = main([
        "lebesgue", "--engine", "shepard", "--degree", "0",
        "--nodes", "5 9", "--grid", "81", "--out", "leb.csv",
    ])
    assert code == 0
    header, rows = read_table(tmp_path / "leb.csv")
    assert header == ["N", "h", "q", "delta", "lebesgue"]
    for row in rows:
        assert float(row[4]) == pytest.approx(1.0, abs=1e-12)


def test_theory_report_matches_direct_computation(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    code = main([
        "theory", "--engine", "l1-cold", "--weight", "exponential:nu=2.0",
        "--out", "theory.txt",
    ])
    assert code == 0
    text = capsys.readouterr().out
    got = dict(line.split(" = ") for line in text.strip().splitlines())
    constants = cone_constants(math.pi / 5.0, 1.0, 1)
    spec = parse_weight_spec("exponential:nu=2.0")
    # c-gamma defaults to the delta factor of the run
    bound = decay_pair(constants, spec, "one-norm", 1.0, gamma=0.5, c_gamma=5.0)
    direct = stability_bound(bound.amplitude, bound.profile, 1)
    assert float(got["lebesgue-bound"]) == pytest.approx(direct.value, rel=1e-12)
    assert float(got["decay-amplitude"]) == pytest.approx(bound.amplitude, rel=1e-12)
    assert int(got["series-terms"]) == direct.terms
    assert float(got["c2"]) == pytest.approx(constants.c2, rel=1e-12)
    assert (tmp_path / "theory.txt").read_text() == text


def test_exit_code_2_on_config_errors(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["converge", "--weight", "gauss"]) == 2
    assert main(["converge", "--config", str(tmp_path / "missing.cfg")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("engine = trapezoid\n")
    assert main(["converge", "--config", bad.as_posix()]) == 2
    assert main(["converge", "--nodes", "26x26"]) == 2  # 2-D count, 1-D domain
    shep = tmp_path / "shep.cfg"
    shep.write_text("engine = shepard\ndegree = 1\n")
    assert main(["converge", "--config", shep.as_posix()]) == 2
    angle = tmp_path / "angle.cfg"
    angle.write_text("cone-angle = 1.0\n")
    assert main(["theory", "--config", angle.as_posix()]) == 2
    capsys.readouterr()


def test_exit_code_4_on_admissibility_refusals(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    # too-slow algebraic decay for the one-norm engine at degree 1
    assert main([
        "converge", "--engine", "l1-cold", "--weight", "algebraic:k=2.5",
        "--nodes", "9", "--grid", "41",
    ]) == 4
    # divergent stability series
    assert main(["theory", "--weight", "algebraic:k=2.0"]) == 4
    err = capsys.readouterr().err
    assert "admissibility" in err


def test_exit_code_3_on_numerical_failures(monkeypatch, capsys):
    def explode(config):
        """Stand-in runner that always breaks down."""
        raise NumericalFailureError("synthetic breakdown")

    monkeypatch.setitem(cli._RUNNERS, "converge", explode)
    assert main(["converge"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_thread_env_keeps_output_deterministic(tmp_path, monkeypatch):
    outputs = {}
    for name, threads in (("a", "1"), ("b", "2"), ("c", "2")):
        d = tmp_path / name
        d.mkdir()
        monkeypatch.chdir(d)
        monkeypatch.setenv("FDPR_THREADS", threads)
        code = main([
            "converge", "--engine", "l1-warm", "--degree", "1",
            "--nodes", "9", "--grid", "101", "--out", "run.csv",
        ])
        assert code == 0
        outputs[name] = (d / "run.csv").read_bytes()
    # repeat runs at a fixed thread count are byte-identical
    assert outputs["b"] == outputs["c"]


def test_thread_count_does_not_change_mls_results(tmp_path, monkeypatch):
    outputs = {}
    for threads in ("1", "4"):
        d = tmp_path / f"t{threads}"
        d.mkdir()
        monkeypatch.chdir(d)
        monkeypatch.setenv("FDPR_THREADS", threads)
        assert main([
            "converge", "--nodes", "9 17", "--grid", "101", "--out", "run.csv",
        ]) == 0
        outputs[threads] = (d / "run.csv").read_bytes()
    assert outputs["1"] == outputs["4"]


def test_invalid_thread_env_is_a_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("FDPR_THREADS", "many")
    assert main(["converge", "--nodes", "5", "--grid", "21"]) == 2
    capsys.readouterr()


def test_lp_converge_end_to_end(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = main([
        "converge", "--engine", "l1-colgen", "--weight", "algebraic:k=3.1",
        "--nodes", "9 17", "--grid", "101", "--out", "lp.csv",
    ])
    assert code == 0
    _, rows = read_table(tmp_path / "lp.csv")
    errs = [float(r[4]) for r in rows]
    assert errs[1] < errs[0]
