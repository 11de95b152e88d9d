import csv
import io
import math

import pytest

from dpplan.cli import WORKLOADS, fixture_path, main
from dpplan.executor import evaluate
from dpplan.workloads import cdf_sequential, default_bins

PACKETS = fixture_path("packets.csv")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv, expected", [
    (("budget", "cdf1", "--bins", "10", "--eps", "1"), "epsilon = 1"),
    (("budget", "cdf1-naive", "--bins", "10", "--eps", "1"), "epsilon = 10"),
    (("budget", "cdf2"), "epsilon = 1"),
    (("budget", "pure"), "epsilon = 0"),
    (("budget", "histogram-good", "--eps", "0.25"), "epsilon = 0.25"),
])
def test_budget(capsys, argv, expected):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out.splitlines()[0] == expected


def test_budget_verbose_lists_contributions(capsys):
    _, out, _ = run(capsys, "budget", "cdf1", "--bins", "3", "--verbose")
    assert len(out.splitlines()) == 4


@pytest.mark.parametrize("argv, expected", [
    (("accuracy", "cdf1", "--bins", "10", "--eps", "1", "--beta", "0.05"), "alpha = 53"),
    (("accuracy", "cdf2", "--bins", "10", "--eps", "1", "--beta", "0.05"), "alpha = 22"),
    (("accuracy", "cdf2", "--bins", "3", "--eps", "1", "--beta", "0.1"), "alpha = 12"),
    (("accuracy", "pure"), "alpha = 0"),
])
def test_accuracy(capsys, argv, expected):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out.strip() == expected


def test_accuracy_exact(capsys):
    _, out, _ = run(capsys, "accuracy", "cdf1", "--exact")
    assert float(out.split("=")[1]) == pytest.approx(10 * math.log(200))


def test_analyzer_output_is_stable(capsys):
    first = run(capsys, "accuracy", "byGenAgeNat", "--exact")
    assert first == run(capsys, "accuracy", "byGenAgeNat", "--exact")


def test_unknown_workload_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["budget", "nope"])
    assert info.value.code == 2


def test_bad_beta_is_usage_error(capsys):
    code, _, err = run(capsys, "accuracy", "cdf1", "--beta", "1.5")
    assert code == 2 and "beta" in err


def test_leaky_histogram_exit_code(capsys):
    for command in (["budget"], ["accuracy"], ["run", fixture_path("colors.csv"), "--cap", "10"]):
        code, _, err = run(capsys, command[0], "histogram-bad", *command[1:])
        assert code == 4 and "safety" in err


def test_run_refuses_over_budget(tmp_path, capsys):
    out = tmp_path / "o.csv"
    code, _, err = run(capsys, "run", "cdf1-naive", PACKETS, "--cap", "1", "--out", str(out))
    assert code == 3 and "refused" in err
    assert not out.exists()


def test_run_noiseless_gives_true_cdf(tmp_path, capsys, packets):
    out = tmp_path / "o.csv"
    code, _, _ = run(capsys, "run", "cdf1", PACKETS, "--cap", "1e6", "--eps", "1e6", "--seed", "1", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    bins = default_bins(10)
    assert [int(r["key"]) for r in rows] == bins
    truth = [sum(1 for p in packets if p.length <= b) for b in bins]
    assert [float(r["value"]) for r in rows] == pytest.approx(truth, abs=1e-2)


def test_run_is_deterministic_and_matches_library(tmp_path, capsys, packets):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(capsys, "run", "cdf1", PACKETS, "--cap", "1", "--seed", "7", "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    lib = evaluate(lambda d: cdf_sequential(default_bins(10), 1.0, d), packets, 1, seed=7)
    written = [float(r["value"]) for r in csv.DictReader(paths[0].open())]
    assert written == list(lib)


def test_run_histogram_keys(capsys):
    code, out, _ = run(capsys, "run", "byGenAge", fixture_path("adult.csv"), "--cap", "1", "--seed", "0")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 16 and rows[0]["key"] == "Female/17-24"


def test_run_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("id,timestamp,src,dest,protocol,length,payload\n1,2,3\n")
    code, _, err = run(capsys, "run", "cdf1", str(p), "--cap", "1")
    assert code == 5 and ":2:" in err


def test_run_missing_file(tmp_path, capsys):
    code, _, _ = run(capsys, "run", "cdf1", str(tmp_path / "nope.csv"), "--cap", "1")
    assert code == 2


def test_simulate_envelope(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    code, text, _ = run(capsys, "simulate", "cdf2", "--bins", "10", "--eps", "1", "--beta", "0.05",
                        "--trials", "300", "--seed", "3", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 300 and rows[0]["trial"] == "1"
    fraction = float(text.split("exceed fraction = ")[1].split()[0])
    assert fraction <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / 300)


def test_simulate_single_trial_and_seed(capsys):
    first = run(capsys, "simulate", "cdf1", "--trials", "1", "--seed", "9")
    assert first[0] == 0 and first[1].count("\n") == 3
    assert first == run(capsys, "simulate", "cdf1", "--trials", "1", "--seed", "9")


def test_simulate_rejects_zero_trials(capsys):
    assert run(capsys, "simulate", "cdf1", "--trials", "0")[0] == 2


def test_compare_bounds(capsys):
    code, out, _ = run(capsys, "compare-bounds", "--scale", "1", "--beta", "0.1", "--n-max", "100")
    rows = {int(r["n"]): r for r in csv.DictReader(io.StringIO(out))}
    assert float(rows[2]["union_alpha"]) == pytest.approx(5.9915, abs=1e-4)
    assert float(rows[2]["chernoff_alpha"]) == pytest.approx(8.473, abs=1e-3)
    assert float(rows[100]["union_alpha"]) == pytest.approx(690.78, abs=1e-2)
    assert float(rows[100]["chernoff_alpha"]) == pytest.approx(48.955, abs=1e-3)


def table_rows(out):
    return [line.split() for line in out.splitlines()[1:]]


def test_optimize_first_rows(capsys):
    code, out, _ = run(capsys, "optimize", "--tolerances", "100,100,100")
    assert code == 0
    assert [r[-2:] for r in table_rows(out)] == [["0.06", "61.48"], ["0.06", "96.13"], ["0.11", "85.74"]]


def test_optimize_last_rows(capsys):
    _, out, _ = run(capsys, "optimize", "--tolerances", "5,5,10")
    rows = table_rows(out)
    assert rows[0][2:] == ["✓", "0.76", "4.85"]
    assert rows[1][2:] == ["×", "MaxBud", "1", "5.76"]
    assert rows[2][2:] == ["✓", "0.96", "9.82"]


def test_optimize_single_analysis(capsys):
    _, out, _ = run(capsys, "optimize", "--analyses", "byGen", "--tolerances", "inf", "--total", "1")
    assert table_rows(out)[0][2:4] == ["✓", "0.01"]


def test_optimize_mismatched_tolerances(capsys):
    assert run(capsys, "optimize", "--tolerances", "1,2")[0] == 2


def test_every_workload_budgets_and_runs(capsys):
    for name in WORKLOADS:
        if name == "histogram-bad":
            continue
        assert run(capsys, "budget", name)[0] == 0
        assert run(capsys, "accuracy", name)[0] == 0
