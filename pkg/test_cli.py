#!/usr/bin/env python3
"""
Tests for the mcs-alloc command line.

Runs main() in-process and checks output formats and exit codes.
"""

from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
import csv
import io
import json
import tempfile

import conftest  # noqa: F401
from mcs_alloc.__main__ import main
from mcs_alloc.experiment import REPORT_HEADER, SWEEP_HEADER
from mcs_alloc.geo import Location
from mcs_alloc.mpft import MpftInstance, MpftTask, WorkingArea
from mcs_alloc.scenario import save_instance


def run(*argv) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        try:
            code = main([str(a) for a in argv])
        except SystemExit as e:
            code = e.code
    return code, out.getvalue(), err.getvalue()


def test_generate_and_validate():
    """generate prints path and digest; validate accepts the file."""
    print("\n[TEST] generate / validate")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "inst.yaml"
        code, out, _ = run("generate", "--mode", "fpmt", "--seed", 1, "--m", 3, "--n", 6, "--q", 2, "-o", path)
        assert code == 0
        name, digest = out.split()
        assert name == str(path) and len(digest) == 64

        code, out, _ = run("validate", path)
        assert code == 0 and "valid" in out

        again = Path(tmp) / "again.yaml"
        run("generate", "--mode", "fpmt", "--seed", 1, "--m", 3, "--n", 6, "--q", 2, "-o", again)
        assert path.read_text() == again.read_text()

    print("  ✓ Generated files are valid and reproducible")


def test_solve_formats():
    """JSON and CSV reports; runtime can be omitted for byte-stable output."""
    print("\n[TEST] solve output")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "inst.yaml"
        run("generate", "--mode", "fpmt", "--seed", 2, "--m", 3, "--n", 6, "--q", 2, "-o", path)

        code, out, _ = run("solve", path, "--solver", "mt-mcmf")
        assert code == 0
        report = json.loads(out)
        assert report["solver"] == "mt-mcmf"
        assert report["objectives"]["accomplished"] == 6
        assert "runtime_ms" in report

        first = run("solve", path, "--solver", "mtp-mcmf", "--k", 4, "--omit-runtime")[1]
        second = run("solve", path, "--solver", "mtp-mcmf", "--k", 4, "--omit-runtime")[1]
        assert first == second and "runtime_ms" not in json.loads(first)
        assert json.loads(first)["parameters"] == {"q": 2, "k": 4}

        code, out, _ = run("solve", path, "--solver", "mt-grdpt", "--format", "csv")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == REPORT_HEADER and len(rows) == 2
        assert rows[1][0] == "mt-grdpt"

    print("  ✓ JSON and CSV reports written")


def test_exit_codes():
    """Usage 2, input/mode 3, infeasible 4, size limit 5."""
    print("\n[TEST] exit codes")

    with tempfile.TemporaryDirectory() as tmp:
        fpmt = Path(tmp) / "fpmt.yaml"
        mpft = Path(tmp) / "mpft.yaml"
        run("generate", "--mode", "fpmt", "--seed", 3, "--m", 4, "--n", 12, "--q", 4, "-o", fpmt)
        run("generate", "--mode", "mpft", "--seed", 3, "--n", 4, "--p", 2, "-o", mpft)

        assert run("solve", fpmt, "--solver", "simulated-annealing")[0] == 2
        assert run("frobnicate")[0] == 2

        code, _, err = run("solve", fpmt, "--solver", "w-ilp")
        assert code == 3 and "fpmt" in err
        assert run("solve", fpmt, "--solver", "mtp-mcmf")[0] == 3
        assert run("solve", fpmt, "--solver", "mtp-mcmf", "--k", 2)[0] == 3
        assert run("bounds", fpmt)[0] == 3
        assert run("solve", Path(tmp) / "missing.yaml", "--solver", "mt-mcmf")[0] == 3

        code, _, err = run("solve", mpft, "--solver", "c-ilp", "--budget", 0.5)
        assert code == 4 and "c_min" in err

        code, _, err = run("solve", fpmt, "--solver", "mt-mcmf", "--enumeration-budget", 10)
        assert code == 5 and "mtp-mcmf" in err

        starved = Path(tmp) / "starved.yaml"
        save_instance(MpftInstance.from_locations(
            [WorkingArea("a0", Location.planar(0, 0), 1, 1.0)],
            [MpftTask("t0", Location.planar(1, 0), 2)],
        ), starved)
        assert run("solve", starved, "--solver", "w-ilp")[0] == 4
        assert run("validate", starved)[0] == 3

    print("  ✓ Exit codes match their error classes")


def test_bounds_and_mpft_solvers():
    """bounds prints the payoff table; budgets inside it solve."""
    print("\n[TEST] bounds / mpft solve")

    with tempfile.TemporaryDirectory() as tmp:
        mpft = Path(tmp) / "mpft.yaml"
        run("generate", "--mode", "mpft", "--seed", 4, "--n", 5, "--p", 3, "-o", mpft)
        code, out, _ = run("bounds", mpft)
        assert code == 0
        bounds = json.loads(out)
        assert bounds["c_min"] <= bounds["c_max"] and bounds["d_min"] <= bounds["d_max"]

        budget = (bounds["c_min"] + bounds["c_max"]) / 2
        for solver in ("c-ilp", "c-grd"):
            code, out, _ = run("solve", mpft, "--solver", solver, "--budget", budget)
            assert code == 0
            assert json.loads(out)["objectives"]["incentive"] <= budget * (1 + 1e-9)

        code, out, _ = run("solve", mpft, "--solver", "w-ilp", "--k1", 0.3, "--k2", 0.7)
        assert code == 0 and json.loads(out)["parameters"] == {"k1": 0.3, "k2": 0.7}

    print("  ✓ Bounds and budgeted solves consistent")


SMALL_SWEEP = """name: small-k
axis: k
values: [2, 3]
solvers: [mtp-mcmf]
seeds: 0..1
scenario:
  mode: fpmt
  m: 3
  n: 5
  q: 2
"""


def test_sweep():
    """Sweep rows in grid order followed by mean / stddev rows."""
    print("\n[TEST] sweep")

    with tempfile.TemporaryDirectory() as tmp:
        spec = Path(tmp) / "sweep.yaml"
        spec.write_text(SMALL_SWEEP)
        out_path = Path(tmp) / "rows.csv"
        code, _, _ = run("sweep", "--spec", spec, "--out", out_path)
        assert code == 0

        rows = list(csv.DictReader(out_path.open()))
        assert list(rows[0].keys()) == SWEEP_HEADER
        runs = [r for r in rows if r["stat"] == "run"]
        assert [(r["value"], r["seed"]) for r in runs] == [("2", "0"), ("2", "1"), ("3", "0"), ("3", "1")]
        stats = [r for r in rows if r["stat"] != "run"]
        assert [(r["value"], r["stat"]) for r in stats] == [
            ("2", "mean"), ("2", "stddev"), ("3", "mean"), ("3", "stddev")
        ]
        mean_k2 = sum(float(r["total_distance"]) for r in runs[:2]) / 2
        assert abs(float(stats[0]["total_distance"]) - mean_k2) < 1e-9

        code, out, _ = run("sweep", "--spec", spec, "--no-aggregate", "--seeds", "5..5")
        assert code == 0
        assert len(list(csv.DictReader(io.StringIO(out)))) == 2

        code, out, _ = run("sweep", "--list-presets")
        assert code == 0 and "tasks" in out and "budgets" in out

        assert run("sweep", "--preset", "k", "--spec", spec)[0] == 3
        assert run("sweep", "--preset", "nonexistent")[0] == 3

        bad = Path(tmp) / "bad.yaml"
        bad.write_text(SMALL_SWEEP.replace("mode: fpmt", "mode: mpft"))
        assert run("sweep", "--spec", bad)[0] == 3

    print("  ✓ Sweep CSV ordered and aggregated")


APPROPRIATE_K_SWEEP = """name: small-appropriate-k
axis: q
values: [2, 3]
solvers: [appropriate-k, mt-mcmf]
seeds: 0..1
scenario:
  mode: fpmt
  m: 3
  n: 6
"""


def test_appropriate_k_sweep():
    """Chosen k and performer-count variance reach the sweep CSV and its mean rows."""
    print("\n[TEST] appropriate-k sweep")

    with tempfile.TemporaryDirectory() as tmp:
        spec = Path(tmp) / "sweep.yaml"
        spec.write_text(APPROPRIATE_K_SWEEP)
        out_path = Path(tmp) / "rows.csv"
        code, _, _ = run("sweep", "--spec", spec, "--out", out_path)
        assert code == 0

        rows = list(csv.DictReader(out_path.open()))
        runs = [r for r in rows if r["stat"] == "run"]
        assert len(runs) == 2 * 2 * 2
        for r in runs:
            assert float(r["performer_variance"]) >= 0.0
            if r["solver"] == "appropriate-k":
                assert int(r["q"]) <= int(r["appropriate_k"]) <= 6
            else:
                assert r["appropriate_k"] == ""

        means = [r for r in rows if r["stat"] == "mean" and r["solver"] == "appropriate-k"]
        assert [r["value"] for r in means] == ["2", "3"]
        for mean in means:
            chosen = [
                int(r["appropriate_k"]) for r in runs
                if r["solver"] == "appropriate-k" and r["value"] == mean["value"]
            ]
            assert abs(float(mean["appropriate_k"]) - sum(chosen) / len(chosen)) < 1e-9

        path = Path(tmp) / "inst.yaml"
        run("generate", "--mode", "fpmt", "--seed", 3, "--m", 3, "--n", 6, "--q", 2, "-o", path)
        code, out, _ = run("solve", path, "--solver", "appropriate-k", "--tolerance", 0.05)
        assert code == 0
        report = json.loads(out)
        assert report["parameters"] == {"q": 2, "tolerance": 0.05}
        assert 2 <= report["objectives"]["appropriate_k"] <= 6
        reference = report["details"]["reference_distance"]
        assert report["objectives"]["total_distance"] <= reference * 1.05 + 1e-9

        code, out, _ = run("sweep", "--list-presets")
        assert "appropriate_k_tasks" in out and "appropriate_k_q" in out

    print("  ✓ Appropriate k recorded per grid point")


def test_version():
    """version subcommand and --version flag."""
    print("\n[TEST] version")

    code, out, _ = run("version")
    assert code == 0 and out.startswith("mcs-alloc v")
    assert run("--version")[0] == 0

    print("  ✓ Version printed")


def main_tests():
    """Run all tests."""
    print("\n" + "="*60)
    print("MCS-ALLOC CLI TEST SUITE")
    print("="*60)

    test_generate_and_validate()
    test_solve_formats()
    test_exit_codes()
    test_bounds_and_mpft_solvers()
    test_sweep()
    test_appropriate_k_sweep()
    test_version()

    print("\n" + "="*60)
    print("ALL TESTS PASSED ✓")
    print("="*60 + "\n")


if __name__ == "__main__":
    main_tests()
