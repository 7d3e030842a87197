"""Command line interface: exit codes, document formats, round trips."""

import json
import math
import subprocess
import sys

import pytest

from cheaptalk.cli import entry


def run(capsys, *argv):
    """Drive the CLI in-process; returns (exit code, stdout, stderr)."""
    try:
        code = entry(list(argv))
    except SystemExit as exc:  # argparse-style usage failures
        code = exc.code if isinstance(exc.code, int) else 1
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def solve_doc(capsys, *extra):
    code, out, err = run(capsys, "solve", "--source", "exp", "--rate", "1",
                         "--bias", "0.5", "--bins", "3", *extra)
    assert code == 0, err
    return json.loads(out)


class TestSolve:
    def test_exponential_document_shape(self, capsys):
        doc = solve_doc(capsys)
        assert doc["solver"] == "exp-n-bins"
        assert doc["source"] == {"kind": "exponential", "rate": 1.0}
        assert doc["bias"] == 0.5
        eq = doc["equilibrium"]
        assert eq["edges"][0] == 0.0 and eq["edges"][-1] == "inf"
        assert len(eq["centroids"]) == 3
        assert eq["certificate"]["verdict"] is True
        assert doc["costs"]["encoder"] > doc["costs"]["decoder"]
        assert "runtime_ms" in doc["meta"]

    def test_floats_round_trip_bit_exactly(self, capsys):
        from cheaptalk.exponential import solve_two_bin
        code, out, _ = run(capsys, "solve", "--source", "exp", "--rate", "1",
                           "--bias", "0", "--bins", "2")
        assert code == 0
        edge = json.loads(out)["equilibrium"]["edges"][1]
        assert float(edge) == solve_two_bin(1.0, 0.0).interior_edges[0]

    def test_nonexistence_exits_two(self, capsys):
        code, out, err = run(capsys, "solve", "--source", "exp", "--rate", "1",
                             "--bias", "-0.6", "--bins", "2")
        assert code == 2
        assert out == ""
        assert "no informative equilibrium" in err

    def test_collapse_exits_two(self, capsys):
        code, _, err = run(capsys, "solve", "--source", "exp", "--rate", "1",
                           "--bias", "-0.25", "--bins", "3")
        assert code == 2
        assert "collapse" in err

    def test_gauss_two_bin_uses_closed_form(self, capsys):
        code, out, _ = run(capsys, "solve", "--source", "gauss", "--bias",
                           "0.5", "--bins", "2")
        assert code == 0
        doc = json.loads(out)
        assert doc["solver"] == "gauss-two-bin"
        assert doc["equilibrium"]["edges"][0] == "-inf"
        assert float(doc["equilibrium"]["edges"][1]) == pytest.approx(
            1.2780119500746878, abs=1e-11)

    def test_gauss_zero_bias_notes_reference_point(self, capsys):
        code, out, _ = run(capsys, "solve", "--source", "gauss", "--bias",
                           "0", "--bins", "3")
        assert code == 0
        assert "classical" in json.loads(out)["meta"]["note"]

    def test_exp_ladder_excludes_closing_edge(self, capsys):
        code, out, _ = run(capsys, "solve", "--source", "exp", "--rate", "1",
                           "--bias", "0.5", "--ladder", "--edges", "30")
        assert code == 0
        doc = json.loads(out)
        assert doc["solver"] == "exp-equal-ladder"
        assert doc["equilibrium"]["certificate"]["excluded_edges"] == [30]
        assert doc["equilibrium"]["certificate"]["verdict"] is True

    def test_gauss_ladder_converges(self, capsys):
        code, out, _ = run(capsys, "solve", "--source", "gauss", "--bias",
                           "0.3", "--ladder", "--edges", "30")
        assert code == 0
        doc = json.loads(out)
        assert doc["solver"] == "gauss-ladder"
        assert doc["equilibrium"]["certificate"]["excluded_edges"] == \
            [26, 27, 28, 29, 30]

    def test_gauss_ladder_max_iter_exits_two(self, capsys):
        code, out, err = run(capsys, "solve", "--source", "gauss", "--bias",
                             "0.3", "--ladder", "--max-iter", "5")
        assert code == 2
        assert "certificate failed" in err
        assert json.loads(out)["meta"]["note"].endswith("did not converge")

    def test_csv_format(self, capsys):
        code, out, _ = run(capsys, "solve", "--source", "exp", "--rate", "1",
                           "--bias", "0.5", "--bins", "2", "--format", "csv")
        assert code == 0
        header, row = out.strip().split("\n")
        assert header.startswith("kind,rate,mean,std,bias,solver,edges")
        assert row.startswith("exponential,1,")
        assert ";" in row  # list-valued cells

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "result.json"
        code, out, _ = run(capsys, "solve", "--source", "exp", "--rate", "1",
                           "--bias", "0.5", "--bins", "2", "--out",
                           str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["solver"] == "exp-n-bins"

    def test_usage_errors_exit_one(self, capsys):
        for argv in (
            ("solve", "--source", "exp", "--bias", "0.5", "--bins", "2"),
            ("solve", "--source", "exp", "--rate", "-1", "--bias", "0.5",
             "--bins", "2"),
            ("solve", "--source", "exp", "--rate", "1", "--bias", "0.5"),
            ("solve", "--source", "gauss", "--std", "0", "--bias", "0.5",
             "--bins", "2"),
        ):
            code, _, _ = run(capsys, *argv)
            assert code == 1, argv


class TestSweep:
    def test_bias_sweep_reports_status_per_row(self, capsys):
        code, out, _ = run(capsys, "sweep", "--source", "exp", "--rate", "1",
                           "--vary", "bias", "--from", "-0.6", "--to", "0.2",
                           "--steps", "5", "--bins", "2")
        assert code == 0
        lines = out.strip().split("\n")
        header = lines[0].split(",")
        assert header[:5] == ["index", "bias", "bins", "status", "max_bins"]
        statuses = [line.split(",")[3] for line in lines[1:]]
        assert statuses[0] == "no-informative-equilibrium"
        assert statuses[-1] == "ok"

    def test_bins_sweep_decoder_cost_decreases(self, capsys):
        code, out, _ = run(capsys, "sweep", "--source", "exp", "--rate", "1",
                           "--vary", "bins", "--from", "1", "--to", "6",
                           "--bias", "0.5", "--format", "json")
        assert code == 0
        rows = json.loads(out)["rows"]
        costs = [float(r["decoder_cost"]) for r in rows]
        assert all(a > b for a, b in zip(costs, costs[1:]))
        assert all(r["status"] == "ok" for r in rows)
        assert all(r["max_bins"] == "inf" for r in rows)

    def test_empty_grid_exits_one(self, capsys):
        code, _, _ = run(capsys, "sweep", "--source", "exp", "--rate", "1",
                         "--vary", "bins", "--from", "5", "--to", "2",
                         "--bias", "0.5")
        assert code == 1

    def test_steps_consistency_check(self, capsys):
        code, _, _ = run(capsys, "sweep", "--source", "exp", "--rate", "1",
                         "--vary", "bins", "--from", "2", "--to", "4",
                         "--steps", "7", "--bias", "0.5")
        assert code == 1


class TestVerify:
    def write_doc(self, capsys, tmp_path):
        target = tmp_path / "doc.json"
        code, _, err = run(capsys, "solve", "--source", "exp", "--rate", "1",
                           "--bias", "0.5", "--bins", "3", "--out",
                           str(target))
        assert code == 0, err
        return target

    def test_round_trip_verifies(self, capsys, tmp_path):
        target = self.write_doc(capsys, tmp_path)
        code, out, err = run(capsys, "verify", str(target), "--seed", "42",
                             "--mc-samples", "200000")
        assert code == 0, err
        report = json.loads(out)
        assert report["verified"] is True
        assert report["failures"] == []
        assert report["monte_carlo"]["samples"] == 200000

    def test_tampered_edge_exits_three(self, capsys, tmp_path):
        target = self.write_doc(capsys, tmp_path)
        doc = json.loads(target.read_text())
        doc["equilibrium"]["edges"][1] = float(
            doc["equilibrium"]["edges"][1]) + 0.05
        target.write_text(json.dumps(doc))
        code, out, err = run(capsys, "verify", str(target), "--seed", "42",
                             "--mc-samples", "100000")
        assert code == 3
        assert json.loads(out)["verified"] is False
        assert "verification failure" in err

    def test_tampered_cost_exits_three(self, capsys, tmp_path):
        target = self.write_doc(capsys, tmp_path)
        doc = json.loads(target.read_text())
        doc["costs"]["decoder"] = float(doc["costs"]["decoder"]) * 1.001
        target.write_text(json.dumps(doc))
        code, _, err = run(capsys, "verify", str(target), "--seed", "42",
                           "--mc-samples", "100000")
        assert code == 3
        assert "does not match" in err

    def test_unparseable_document_exits_one(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, "verify", str(bad), "--seed", "1")
        assert code == 1
        assert "cannot parse" in err
        missing = tmp_path / "missing.json"
        code, _, _ = run(capsys, "verify", str(missing), "--seed", "1")
        assert code == 1


class TestDynamics:
    def test_explicit_init_converges(self, capsys):
        code, out, _ = run(capsys, "dynamics", "--source", "exp", "--rate",
                           "1", "--bias", "0.5", "--bins", "4", "--init",
                           "1,2,3", "--method", "lloyd")
        assert code == 0
        doc = json.loads(out)
        assert doc["outcome"]["status"] == "converged"
        assert doc["final"]["certificate"]["verdict"] is True
        assert doc["init_edges"] == [0.0, 1.0, 2.0, 3.0, "inf"]

    def test_collapse_still_exits_zero(self, capsys):
        code, out, _ = run(capsys, "dynamics", "--source", "exp", "--rate",
                           "1", "--bias", "-0.4", "--bins", "3", "--init",
                           "1,2")
        assert code == 0
        doc = json.loads(out)
        assert doc["outcome"]["status"] == "collapsed"
        assert doc["outcome"]["bin_index"] is not None
        assert "final" not in doc

    def test_seeded_runs_reproduce(self, capsys):
        argv = ("dynamics", "--source", "gauss", "--bias", "0.2", "--bins",
                "3", "--seed", "9", "--method", "fixed-point")
        code_a, out_a, _ = run(capsys, *argv)
        code_b, out_b, _ = run(capsys, *argv)
        assert code_a == code_b == 0
        doc_a, doc_b = json.loads(out_a), json.loads(out_b)
        doc_a.pop("meta"), doc_b.pop("meta")  # wall-clock only
        assert doc_a == doc_b

    def test_init_and_seed_are_exclusive(self, capsys):
        base = ("dynamics", "--source", "exp", "--rate", "1", "--bias",
                "0.5", "--bins", "3")
        code, _, _ = run(capsys, *base, "--init", "1,2", "--seed", "4")
        assert code == 1
        code, _, _ = run(capsys, *base)
        assert code == 1

    def test_init_length_checked(self, capsys):
        code, _, _ = run(capsys, "dynamics", "--source", "exp", "--rate", "1",
                         "--bias", "0.5", "--bins", "4", "--init", "1,2")
        assert code == 1

    def test_csv_trace(self, capsys):
        code, out, _ = run(capsys, "dynamics", "--source", "exp", "--rate",
                           "1", "--bias", "0.5", "--bins", "2", "--init",
                           "1.5", "--format", "csv")
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "step,residual,edges,status"
        assert lines[1].startswith("0,")
        assert lines[-1].endswith("converged")


class TestConsoleScript:
    def test_installed_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "cheaptalk.cli", "solve", "--source",
             "exp", "--rate", "1", "--bias", "0", "--bins", "2"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert float(doc["equilibrium"]["edges"][1]) == pytest.approx(
            1.5936242600400401, rel=1e-15)

    def test_version_flag(self):
        import cheaptalk
        proc = subprocess.run(["cheaptalk", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert cheaptalk.__version__ in proc.stdout
