import json
import re
import subprocess
import sys

import pytest

from robagg.cli import build_parser, main
from robagg.constructions import CONSTRUCTION_NAMES
from robagg.schemes import SCHEME_NAMES


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out), err


def test_evaluate_xor(capsys):
    code, out, _ = run_json(capsys, "evaluate", "--scheme", "const:0.5", "--construct", "xor")
    assert code == 0
    assert out["result"]["relative_loss"] == 0.25
    assert out["result"]["relative_loss_exact"] == "1/4"
    assert out["provenance"]["config"]["scheme"] == "const:0.5"


def test_evaluate_degroot_and_fig1(capsys):
    _, out, _ = run_json(capsys, "evaluate", "--scheme", "degroot", "--construct", "degroot-witness")
    assert out["result"]["relative_loss"] == pytest.approx(0.0625)
    _, out, _ = run_json(capsys, "evaluate", "--scheme", "minentropy", "--construct", "fig1")
    assert out["result"]["relative_loss_exact"] == "1/14"


def test_evaluate_mixture_reports_best_reply(capsys):
    _, out, _ = run_json(capsys, "evaluate", "--scheme", "precision", "--construct", "blackwell:golden")
    assert out["result"]["best_reply_loss"] == pytest.approx(0.02254248593736856, abs=1e-12)


def test_monte_carlo_needs_seed(capsys):
    code, _, err = run(capsys, "evaluate", "--scheme", "degroot", "--construct", "xor", "--samples", "100")
    assert code == 2 and "seed" in err
    code, out, _ = run_json(capsys, "evaluate", "--scheme", "degroot", "--construct", "xor",
                            "--samples", "1000", "--seed", "4")
    assert code == 0
    assert out["result"]["method"] == "monte-carlo"
    assert out["result"]["seed"] == 4


def test_unknown_names_exit_2(capsys):
    code, _, err = run(capsys, "evaluate", "--scheme", "nope", "--construct", "xor")
    assert code == 2 and "nope" in err
    code, _, err = run(capsys, "evaluate", "--scheme", "degroot", "--construct", "nope")
    assert code == 2
    code, _, _ = run(capsys, "evaluate", "--scheme", "degroot")
    assert code == 2


def test_json_round_trip(tmp_path, capsys):
    _, out, _ = run_json(capsys, "construct", "--name", "fig1")
    path = tmp_path / "fig1.json"
    path.write_text(json.dumps(out["structure"]))
    _, res, _ = run_json(capsys, "evaluate", "--scheme", "minentropy", "--input", str(path))
    assert res["result"]["relative_loss_exact"] == "1/14"


def test_bad_json_names_the_problem(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"signal_counts": [1], "entries": [{"omega": 1, "signals": [0], "p": "1/2"}]}))
    code, _, err = run(capsys, "evaluate", "--scheme", "degroot", "--input", str(path))
    assert code == 2 and "sum to 1" in err
    code, _, _ = run(capsys, "evaluate", "--scheme", "degroot", "--input", str(tmp_path / "missing.json"))
    assert code == 2


def test_help_lists_names_once():
    text = build_parser().format_help()
    for name in SCHEME_NAMES + CONSTRUCTION_NAMES:
        assert len(re.findall(rf"(?<![\w-]){re.escape(name)}(?![\w-])", text)) == 1, name


def test_output_env_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ROBAGG_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "regret-curve", "--n", "1000,10000", "--seed", "0")
    assert code == 0
    assert (tmp_path / "regret-curve.csv").read_text() == out


def test_explicit_output_file(tmp_path, capsys):
    target = tmp_path / "sub" / "x.json"
    run(capsys, "construct", "--name", "xor", "--format", "json", "--output", str(target))
    assert json.loads(target.read_text())["structure"]


def test_simulate_csv_is_deterministic(capsys):
    args = ("simulate-many", "--k", "3", "--n", "2000", "--trials", "300", "--seed", "9")
    a = run(capsys, *args)
    b = run(capsys, *args)
    assert a == b
    header, row = a[1].strip().splitlines()
    assert "error_rate" in header.split(",")
    assert a[0] == 0


def test_simulate_requires_seed():
    with pytest.raises(SystemExit) as info:
        main(["simulate-many", "--k", "3", "--n", "100"])
    assert info.value.code == 2


def test_regret_curve_bad_list(capsys):
    code, _, err = run(capsys, "regret-curve", "--n", "10,abc", "--seed", "0")
    assert code == 2


def test_optimize_small(capsys):
    code, out, _ = run_json(capsys, "optimize", "--family", "blackwell", "--scheme", "degroot",
                            "--grid", "20", "--restarts", "2")
    assert code == 0
    assert out["result"]["value"] == pytest.approx(0.0625, abs=1e-9)
    assert out["provenance"]["tolerance"] == 1e-7


def test_optimize_bad_family_rejected():
    with pytest.raises(SystemExit) as info:
        main(["optimize", "--family", "nope", "--scheme", "degroot"])
    assert info.value.code == 2


def test_reproduce_only_filters(capsys):
    code, out, _ = run_json(capsys, "reproduce", "--only", "xor,correlated")
    assert code == 0
    assert {r["group"] for r in out["rows"]} == {"xor", "correlated"}
    assert all(r["passed"] for r in out["rows"])
    code, _, _ = run(capsys, "reproduce", "--only", "nope")
    assert code == 2


def test_reproduce_csv_bit_stable(capsys):
    a = run(capsys, "reproduce", "--only", "naive,best-reply", "--format", "csv")
    b = run(capsys, "reproduce", "--only", "naive,best-reply", "--format", "csv")
    assert a == b and a[0] == 0


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "robagg", "evaluate", "--scheme", "const:1/2",
                          "--construct", "xor", "--format", "csv"], capture_output=True, text=True)
    assert res.returncode == 0
    header, row = res.stdout.strip().splitlines()
    assert dict(zip(header.split(","), row.split(",")))["relative_loss"] == "0.25"
