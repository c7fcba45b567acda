import json
import subprocess
import sys

import pytest

from hyperdescent.cli import EXIT_CHECK, EXIT_IO, EXIT_OK, EXIT_USAGE, main


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


class TestGenGraph:
    def test_closure(self, tmp_path):
        out = tmp_path / "c.tsv"
        assert main(["gen-graph", "--depth", "5", "--mode", "closure", "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 258
        assert all(len(l.split("\t")) == 2 for l in lines)

    def test_undirected(self, tmp_path):
        out = tmp_path / "u.tsv"
        assert main(["gen-graph", "--depth", "1", "--out", str(out)]) == EXIT_OK
        assert out.read_text().splitlines() == ["# undirected", "n1\tn0", "n2\tn0"]

    def test_missing_out(self):
        assert main(["gen-graph", "--depth", "2"]) == EXIT_USAGE

    @pytest.mark.parametrize("depth", ["0", "21", "x"])
    def test_bad_depth(self, tmp_path, depth):
        assert main(["gen-graph", "--depth", depth, "--out", str(tmp_path / "g")]) == EXIT_USAGE

    def test_unwritable(self, tmp_path):
        out = tmp_path / "no" / "such" / "dir" / "g.tsv"
        assert main(["gen-graph", "--depth", "2", "--out", str(out)]) == EXIT_IO


class TestBarycenter:
    def test_outputs_and_reproducible(self, tmp_path):
        args = ["barycenter", "--rates", "0.01,0.2", "--iters", "300", "--seed", "1"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--outdir", str(a)]) == EXIT_OK
        assert main(args + ["--outdir", str(b)]) == EXIT_OK
        fa = _files(a)
        assert fa == _files(b)
        assert len(fa) == 2 * 3 * 2 + 1
        assert fa["loss_geodesic_lr0.01.csv"].startswith(b"iteration,loss,excessLoss\n")
        assert fa["offsets_natural_lr0.2.csv"].startswith(b"binLeft,binRight,count\n")
        summary = json.loads(fa["summary.json"])
        assert summary["iterations"] == 300
        assert summary["bias_eta0.1_nat_outward"] is True
        assert "geodesic_lr0.2_mean_abs_offset" in summary

    def test_bad_rates(self, tmp_path):
        assert main(["barycenter", "--rates", "0.1,-1", "--outdir", str(tmp_path)]) == EXIT_USAGE


class TestEmbedEval:
    def test_round_trip(self, tmp_path):
        g = tmp_path / "g.tsv"
        assert main(["gen-graph", "--depth", "3", "--out", str(g)]) == EXIT_OK
        run = tmp_path / "run"
        assert main(["embed", "--graph", str(g), "--steps", "300", "--lr", "0.05", "--out", str(run)]) == EXIT_OK
        res = json.loads((run / "eval.json").read_text())
        assert res["steps_completed"] == 300
        assert res["failed"] is False
        assert -1.0 <= res["tau"] <= 1.0
        assert len((run / "embedding.tsv").read_text().splitlines()) == 15
        assert len((run / "trace.csv").read_text().splitlines()) == 301
        ev = tmp_path / "ev.json"
        assert main(["eval", "--graph", str(g), "--embedding", str(run / "embedding.tsv"),
                     "--out", str(ev)]) == EXIT_OK
        assert json.loads(ev.read_text())["tau"] == pytest.approx(res["tau"], abs=1e-15)

    def test_missing_graph(self, tmp_path):
        assert main(["embed", "--graph", str(tmp_path / "none.tsv"), "--out", str(tmp_path)]) == EXIT_IO

    def test_malformed_graph(self, tmp_path):
        g = tmp_path / "g.tsv"
        g.write_text("a b c\n")
        assert main(["eval", "--graph", str(g), "--embedding", str(g)]) == EXIT_IO

    def test_bad_rule(self, tmp_path):
        assert main(["embed", "--graph", "g", "--rule", "adam", "--out", str(tmp_path)]) == EXIT_USAGE


class TestSelftest:
    def test_small(self, tmp_path, capsys):
        out = tmp_path / "s.json"
        assert main(["expmap-selftest", "--samples", "500", "--seed", "2", "--out", str(out)]) == EXIT_OK
        assert json.loads(out.read_text())["passed"] is True
        assert "passed: True" in capsys.readouterr().out

    def test_zero_samples(self):
        assert main(["expmap-selftest", "--samples", "0"]) == EXIT_USAGE


def test_no_command():
    assert main([]) == EXIT_USAGE


def test_module_entry_point(tmp_path):
    out = tmp_path / "g.tsv"
    res = subprocess.run([sys.executable, "-m", "hyperdescent.cli", "gen-graph", "--depth", "2",
                          "--out", str(out)], capture_output=True, text=True)
    assert res.returncode == 0
    assert out.exists()


def test_exit_codes_distinct():
    assert len({EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CHECK}) == 4
