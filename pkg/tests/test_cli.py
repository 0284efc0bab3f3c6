"""Command line front end: exit codes, output shapes, determinism.

The contract pinned here:

* ``eval`` prints one JSON object with keys value/tail/truncation,
  ``sweep`` prints a CSV table, ``verify`` prints one JSON line per
  check on stdout and a human summary on stderr, ``systems`` and
  ``parse`` print what their names say.
* exit 0 on success, 1 when a verification check fails, 2 for usage
  errors of any flavour (bad flags, bad config, bad expressions), 3
  when the symbolic term budget trips.
* repeated runs with the same arguments emit byte-identical stdout,
  including ``verify`` under different thread counts.

Everything runs in process through ``main(argv)``; ``--term-budget``
mutates a module global that the CLI never restores (a real process
exits right after), so a fixture snapshots it around every test.
"""

import json

import pytest

from ntkms.cli import main
from ntkms.dsl import format_element
from ntkms.nt import get_term_budget, set_term_budget, unit_projection
from ntkms.product_system import AffineToeplitzSystem

AFFINE = AffineToeplitzSystem()


@pytest.fixture(autouse=True)
def _restore_term_budget():
    old = get_term_budget()
    yield
    set_term_budget(old)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- eval ------------------------------------------------------------------------


def test_eval_prints_state_json(capsys):
    code, out, err = run(
        capsys, "eval", "--system", "affine-toeplitz", "--expr", "i[1](1@0)"
    )
    assert code == 0
    assert err == ""
    lines = out.splitlines()
    assert len(lines) == 1
    payload = json.loads(lines[0])
    assert set(payload) == {"value", "tail", "truncation"}
    # the unit evaluates to exactly 1, whatever the truncation
    assert payload["value"] == [1.0, 0.0]
    assert payload["truncation"] == 1000
    assert 0 < payload["tail"] < 1e-2
    # sort_keys means the serialized line is reproducible byte for byte
    assert lines[0] == json.dumps(payload, sort_keys=True)


def test_eval_ground_state_kills_nontrivial_fibers(capsys):
    code, out, _ = run(
        capsys, "eval", "--system", "affine-toeplitz",
        "--state", "ground", "--expr", "alpha[2](i[1](1@0))",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload == {"value": [0.0, 0.0], "tail": 0.0, "truncation": 0}

    code, out, _ = run(
        capsys, "eval", "--system", "affine-toeplitz",
        "--state", "ground", "--expr", "i[1](1@0)",
    )
    assert code == 0
    assert json.loads(out)["value"] == [1.0, 0.0]


def test_eval_requires_an_expression(capsys):
    code, _, err = run(capsys, "eval", "--system", "affine-toeplitz")
    assert code == 2
    assert "expression is required" in err


def test_eval_rejects_unknown_state_from_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"state": "plasma", "expr": "i[1](1@0)"}))
    code, _, err = run(capsys, "eval", "--config", str(cfg))
    assert code == 2
    assert "unknown state 'plasma'" in err


def test_eval_rejects_beta_at_or_below_critical(capsys):
    code, _, err = run(
        capsys, "eval", "--system", "affine-toeplitz",
        "--expr", "i[1](1@0)", "--beta", "1.5",
    )
    assert code == 2
    assert err.startswith("error:")


def test_eval_bad_expression_reports_the_column(capsys):
    code, _, err = run(
        capsys, "eval", "--system", "affine-toeplitz", "--expr", "i[2](1@9)"
    )
    assert code == 2
    assert "error: column" in err


# -- parse and systems -----------------------------------------------------------


def test_parse_prints_the_canonical_normal_form(capsys):
    code, out, _ = run(
        capsys, "parse", "--system", "affine-toeplitz",
        "--expr", "alpha[2](i[1](1@0))",
    )
    assert code == 0
    assert out == format_element(unit_projection(AFFINE, 2)) + "\n"


def test_systems_lists_every_builtin_as_json(capsys):
    code, out, err = run(capsys, "systems")
    assert code == 0
    assert err == ""
    rows = [json.loads(line) for line in out.splitlines()]
    assert [r["system"] for r in rows] == [
        "affine-toeplitz", "additive-toeplitz", "lattice-dilation", "cuntz",
    ]
    by_name = {r["system"]: r for r in rows}
    assert by_name["affine-toeplitz"]["engine"] == "toeplitz"
    assert by_name["affine-toeplitz"]["critical_beta"] == 2.0
    assert by_name["affine-toeplitz"]["semigroup"] == "nat-mult"
    assert by_name["cuntz"] == {
        "critical_beta": 1.0,
        "engine": "scalar",
        "params": {"k": 2},
        "scaling": "2^n",
        "semigroup": "nat-add",
        "system": "cuntz",
    }
    assert by_name["lattice-dilation"]["params"] == {"d": 1}


# -- sweep -----------------------------------------------------------------------


def test_sweep_tabulates_observables_over_betas(capsys):
    argv = (
        "sweep", "--system", "affine-toeplitz", "--betas", "3,4",
        "--bound", "400",
        "--observable", "p2=alpha[2](i[1](1@0))",
        "--observable", "u=i[1](1@0)",
    )
    code, out, err = run(capsys, *argv)
    assert code == 0
    assert err == ""
    lines = out.splitlines()
    assert lines[0] == "beta,zeta,tail,p2,u"
    assert len(lines) == 3
    for line, beta in zip(lines[1:], ("3", "4")):
        cells = line.split(",")
        assert len(cells) == 5
        assert cells[0] == beta
        assert float(cells[1]) > 1.0
        assert float(cells[2]) >= 0.0
        # the unit column is exact whatever the truncation
        assert cells[4] == "1+0i"
    # the projection weight drops with beta
    p2 = [complex(line.split(",")[3].replace("i", "j")) for line in lines[1:]]
    assert p2[1].real < p2[0].real

    code2, out2, _ = run(capsys, *argv)
    assert code2 == 0 and out2 == out


def test_sweep_reads_observables_from_config_and_flags_override(capsys, tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "system": "affine-toeplitz",
        "betas": [3, 4],
        "bound": 400,
        "observables": {"p2": "alpha[2](i[1](1@0))"},
    }))
    code, out, _ = run(capsys, "sweep", "--config", str(cfg))
    assert code == 0
    assert out.splitlines()[0] == "beta,zeta,tail,p2"

    code, out, _ = run(
        capsys, "sweep", "--config", str(cfg), "--observable", "u=i[1](1@0)"
    )
    assert code == 0
    assert out.splitlines()[0] == "beta,zeta,tail,u"


def test_sweep_usage_errors(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--system", "affine-toeplitz")
    assert code == 2 and "sweep needs --betas" in err

    cfg = tmp_path / "empty.json"
    cfg.write_text(json.dumps({"betas": []}))
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 2 and "at least one beta" in err

    base = ("sweep", "--system", "affine-toeplitz", "--betas", "3")
    code, _, err = run(capsys, *base, "--observable", "p2")
    assert code == 2 and "must look like name=expr" in err
    code, _, err = run(capsys, *base, "--observable", "2bad=i[1](1@0)")
    assert code == 2 and "must be an identifier" in err
    code, _, err = run(
        capsys, *base, "--observable", "u=i[1](1@0)", "--observable", "u=i[1](1@0)"
    )
    assert code == 2 and "duplicate observable name" in err


# -- verify ----------------------------------------------------------------------


def test_verify_emits_json_lines_and_a_summary(capsys):
    code, out, err = run(
        capsys, "verify", "--system", "affine-toeplitz", "--suite", "structure"
    )
    assert code == 0
    reports = [json.loads(line) for line in out.splitlines()]
    assert reports and all(r["passed"] for r in reports)
    assert all(set(r) == {"check", "passed", "metrics", "detail"} for r in reports)
    names = [r["check"] for r in reports]
    assert "structure:index-map-associative" in names
    assert "algebra:projection-covariance" in names
    n = len(reports)
    assert err.splitlines()[-1] == (
        f"{n} checks on affine-toeplitz: {n} passed, 0 failed"
    )


def test_verify_exits_one_when_a_check_fails(capsys):
    code, out, err = run(
        capsys, "verify", "--system", "affine-toeplitz", "--suite", "structure",
        "--corrupt", "2,2,0,1,1,0",
    )
    assert code == 1
    reports = [json.loads(line) for line in out.splitlines()]
    failed = [r["check"] for r in reports if not r["passed"]]
    assert "structure:index-map-associative" in failed
    assert f"{len(failed)} failed" in err.splitlines()[-1]


def test_verify_stdout_is_deterministic_across_runs_and_threads(capsys):
    argv = ("verify", "--system", "affine-toeplitz", "--suite", "structure",
            "--corrupt", "2,2,0,1,1,0")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    _, threaded, _ = run(capsys, *argv, "--threads", "2")
    assert threaded == first


def test_verify_thread_count_is_capped_by_the_environment(capsys, monkeypatch):
    argv = ("verify", "--system", "affine-toeplitz", "--suite", "structure",
            "--corrupt", "2,2,0,1,1,0")
    _, plain, _ = run(capsys, *argv)
    monkeypatch.setenv("NTKMS_THREADS", "1")
    code, capped, _ = run(capsys, *argv, "--threads", "8")
    assert code == 1 and capped == plain

    monkeypatch.setenv("NTKMS_THREADS", "soup")
    code, _, err = run(capsys, *argv)
    assert code == 2 and "NTKMS_THREADS must be an integer" in err


def test_verify_rejects_bad_thread_and_suite_requests(capsys, tmp_path):
    code, _, err = run(
        capsys, "verify", "--system", "affine-toeplitz",
        "--suite", "structure", "--threads", "0",
    )
    assert code == 2 and "threads must be >= 1" in err

    # argparse screens --suite, so a bogus suite can only arrive via config
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"suite": "nonsense"}))
    code, _, err = run(capsys, "verify", "--config", str(cfg))
    assert code == 2 and "unknown suites ['nonsense']" in err


# -- config files ----------------------------------------------------------------


def test_config_errors_are_usage_errors(capsys, tmp_path):
    code, _, err = run(capsys, "eval", "--config", str(tmp_path / "missing.json"))
    assert code == 2 and err.startswith("error:")

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "eval", "--config", str(bad))
    assert code == 2

    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]")
    code, _, err = run(capsys, "eval", "--config", str(listy))
    assert code == 2

    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"expr": "i[1](1@0)", "bogus": 1}))
    code, _, err = run(capsys, "eval", "--config", str(unknown))
    assert code == 2 and "unknown config keys ['bogus']" in err


def test_flags_override_config_values(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "system": "affine-toeplitz",
        "expr": "alpha[2](i[1](1@0))",
        "beta": 3.0,
        "bound": 400,
    }))
    _, from_config, _ = run(capsys, "eval", "--config", str(cfg))
    _, explicit, _ = run(
        capsys, "eval", "--system", "affine-toeplitz",
        "--expr", "alpha[2](i[1](1@0))", "--beta", "3", "--bound", "400",
    )
    assert from_config == explicit

    _, overridden, _ = run(capsys, "eval", "--config", str(cfg), "--beta", "4")
    assert overridden != from_config


# -- system and trace option validation -------------------------------------------


def test_system_parameters_are_checked(capsys):
    code, _, err = run(
        capsys, "eval", "--system", "affine-toeplitz", "--d", "2",
        "--expr", "i[1](1@0)",
    )
    assert code == 2 and "takes no parameters" in err

    code, _, err = run(
        capsys, "eval", "--system", "cuntz", "--d", "2", "--expr", "i[0](1@0)"
    )
    assert code == 2 and "d does not apply to cuntz" in err

    code, _, err = run(
        capsys, "eval", "--system", "lattice-dilation", "--k", "3",
        "--expr", "i[1](1@0)",
    )
    assert code == 2 and "k does not apply to lattice-dilation" in err

    code, out, _ = run(
        capsys, "eval", "--system", "lattice-dilation", "--d", "2",
        "--expr", "i[1](1@0)",
    )
    assert code == 0 and json.loads(out)["value"] == [1.0, 0.0]

    code, out, _ = run(
        capsys, "eval", "--system", "cuntz", "--k", "3", "--expr", "i[0](1@0)"
    )
    assert code == 0 and json.loads(out)["value"] == [1.0, 0.0]


def test_trace_options_are_checked(capsys):
    code, _, err = run(
        capsys, "eval", "--system", "cuntz", "--trace", "haar",
        "--expr", "i[0](1@0)",
    )
    assert code == 2 and "does not apply to a scalar" in err

    code, _, err = run(
        capsys, "eval", "--system", "affine-toeplitz", "--trace", "fourier",
        "--expr", "i[1](1@0)",
    )
    assert code == 2 and "unknown trace 'fourier'" in err

    code, _, err = run(
        capsys, "eval", "--system", "affine-toeplitz", "--theta", "0.3",
        "--expr", "i[1](1@0)",
    )
    assert code == 2 and "theta only applies to point-mass" in err

    code, _, err = run(
        capsys, "eval", "--system", "lattice-dilation", "--d", "2",
        "--trace", "point-mass", "--theta", "0.2", "--expr", "i[1](1@0)",
    )
    assert code == 2 and "theta needs 2 angle(s), got 1" in err

    code, out, _ = run(
        capsys, "eval", "--system", "affine-toeplitz",
        "--trace", "point-mass", "--theta", "0.25", "--expr", "i[1](1@0)",
    )
    assert code == 0 and json.loads(out)["value"] == [1.0, 0.0]


def test_corrupt_flag_is_checked(capsys):
    base = ("verify", "--system", "affine-toeplitz", "--suite", "structure")
    code, _, err = run(capsys, *base, "--corrupt", "1,2,3")
    assert code == 2 and "six integers" in err
    code, _, err = run(capsys, *base, "--corrupt", "2,2,0,9,1,0")
    assert code == 2 and "out of range" in err
    code, _, err = run(capsys, *base, "--corrupt", "2,2,0,1,0,1")
    assert code == 2 and "corrupt pairs must differ" in err


# -- term budget ------------------------------------------------------------------


def test_term_budget_trips_with_exit_three(capsys):
    # two copies of the fiber-4 unit projection multiply into 16 raw
    # terms, past a budget of 10
    code, _, err = run(
        capsys, "eval", "--system", "cuntz",
        "--expr", "alpha[4](i[0](1@0)) * alpha[4](i[0](1@0))",
        "--term-budget", "10",
    )
    assert code == 3
    assert "raw-term cap (10)" in err

    code, out, _ = run(
        capsys, "eval", "--system", "cuntz",
        "--expr", "alpha[4](i[0](1@0)) * alpha[4](i[0](1@0))",
        "--term-budget", "1000",
    )
    assert code == 0
    # Gibbs weight of the fiber-4 projection at beta = 3 is 4^-4
    assert json.loads(out)["value"] == pytest.approx([4.0 ** -4, 0.0])


def test_term_budget_must_be_positive(capsys):
    code, _, err = run(
        capsys, "eval", "--system", "cuntz", "--expr", "i[0](1@0)",
        "--term-budget", "0",
    )
    assert code == 2 and "term_budget must be positive" in err
