"""End-to-end CLI coverage for every subcommand."""

import csv
import json

import numpy as np
import pytest

from blocktree.cli import main
from blocktree.hashpower import sample_power_law


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def run_config(tmp_path):
    return write_json(
        tmp_path / "run.json",
        {
            "topology": "ba",
            "n_nodes": 20,
            "m": 3,
            "power_family": "power_law",
            "alpha": 1.5,
            "tau": 1.0,
            "tau_nd": 0.1,
            "t_sim": 50.0,
            "seed": 5,
        },
    )


class TestGenGraphAndMfpt:
    def test_complete_graph_round_trip(self, tmp_path, capsys):
        graph_path = tmp_path / "k5.txt"
        assert main(["gen-graph", "--kind", "complete", "--n", "5",
                     "--out", str(graph_path)]) == 0
        assert main(["mfpt", str(graph_path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["mean_mfpt"] == pytest.approx(4.0, abs=1e-9)
        assert doc["tau_b"] == pytest.approx(0.25, abs=1e-9)
        assert doc["connected"] is True

    def test_er_requires_mean_degree(self, tmp_path, capsys):
        assert main(["gen-graph", "--kind", "er", "--n", "10",
                     "--out", str(tmp_path / "g.txt")]) == 2
        assert "mean-degree" in capsys.readouterr().err

    def test_mfpt_tau_flag(self, tmp_path, capsys):
        graph_path = tmp_path / "k2.txt"
        main(["gen-graph", "--kind", "complete", "--n", "2", "--out", str(graph_path)])
        main(["mfpt", str(graph_path), "--tau", "10"])
        doc = json.loads(capsys.readouterr().out)
        assert doc["tau_b"] == pytest.approx(10.0)


class TestSimulate:
    def test_json_document(self, tmp_path, run_config):
        out = tmp_path / "run.json.out"
        assert main(["simulate", "--config", run_config, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["tau_nd"] == 0.1
        assert doc["seed"] == 5
        assert doc["blocks"][0] == {
            "id": 0, "parent": None, "height": 0, "miner": None, "time": 0.0,
        }
        assert len(doc["blocks"]) > 10
        assert 0.0 <= doc["consensus_time"] <= 50.0
        assert doc["metrics"]["n_blocks"] == len(doc["blocks"])
        assert len(doc["head_history"]["time"]) == doc["n_events"]

    def test_binary_trace(self, tmp_path, run_config):
        out = tmp_path / "run.out"
        trace = tmp_path / "events.bin"
        main(["simulate", "--config", run_config, "--out", str(out),
              "--trace", str(trace)])
        doc = json.loads(out.read_text())
        assert trace.stat().st_size == 21 * doc["n_events"]

    def test_no_events_flag(self, tmp_path, run_config):
        out = tmp_path / "run.out"
        main(["simulate", "--config", run_config, "--out", str(out), "--no-events"])
        assert "head_history" not in json.loads(out.read_text())

    def test_seed_override_changes_run(self, tmp_path, run_config):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["simulate", "--config", run_config, "--out", str(a)])
        main(["simulate", "--config", run_config, "--out", str(b), "--seed", "6"])
        assert json.loads(a.read_text())["blocks"] != json.loads(b.read_text())["blocks"]

    def test_malformed_json_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n  "topology": "ba",\n  broken\n}')
        assert main(["simulate", "--config", str(bad)]) == 2
        assert "bad.json:3" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_json(
            tmp_path / "c.json",
            {"topology": "complete", "n_nodes": 4, "power_family": "power_law",
             "alpha": 1.5, "tau_nd": 0.1, "t_sim": 10.0, "typo_key": 1},
        )
        assert main(["simulate", "--config", cfg]) == 2
        assert "typo_key" in capsys.readouterr().err

    def test_missing_tau_nd(self, tmp_path, capsys):
        cfg = write_json(
            tmp_path / "c.json",
            {"topology": "complete", "n_nodes": 4, "power_family": "power_law",
             "alpha": 1.5, "t_sim": 10.0},
        )
        assert main(["simulate", "--config", cfg]) == 2
        assert "tau_nd" in capsys.readouterr().err


class TestSweep:
    def sweep_config(self, tmp_path):
        return write_json(
            tmp_path / "sweep.json",
            {
                "topology": "complete",
                "n_nodes": 5,
                "power_family": "exponential",
                "lam": 0.05,
                "tau_nd_grid": [0.001],
                "replicates": 1,
                "t_sim": 100.0,
                "base_seed": 3,
            },
        )

    def test_single_point_csv(self, tmp_path, capsys):
        cfg = self.sweep_config(tmp_path)
        out = tmp_path / "rows.csv"
        summary = tmp_path / "summary.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out),
                     "--summary", str(summary)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 1
        assert rows[0]["topology"] == "complete"
        assert float(rows[0]["xi"]) == 0.0
        assert summary.exists()

    def test_byte_identical_reruns(self, tmp_path):
        cfg = self.sweep_config(tmp_path)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["sweep", "--config", cfg, "--out", str(a)])
        main(["sweep", "--config", cfg, "--out", str(b), "--threads", "2"])
        assert a.read_bytes() == b.read_bytes()


class TestFit:
    def shares_csv(self, tmp_path, name, data):
        path = tmp_path / name
        lines = ["miner_id,blocks"] + [f"m{i},{x}" for i, x in enumerate(data)]
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    def test_pareto_shares_prefer_power_law(self, tmp_path, capsys):
        data = sample_power_law(5000, alpha=1.5, xmin=1.0, seed=0)
        path = self.shares_csv(tmp_path, "pareto.csv", data)
        assert main(["fit", path]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["r"] > 0
        assert doc["p_value"] < 0.05
        assert doc["preferred"] == "power_law"

    def test_multiple_periods_print_table(self, tmp_path, capsys):
        p1 = self.shares_csv(
            tmp_path, "a.csv", sample_power_law(2000, 1.5, 1.0, seed=1)
        )
        p2 = self.shares_csv(
            tmp_path, "b.csv",
            np.random.default_rng(2).exponential(0.05, 2000),
        )
        out = tmp_path / "fits.json"
        assert main(["fit", p1, p2, "--out", str(out)]) == 0
        table = capsys.readouterr().out
        assert "a.csv" in table and "b.csv" in table
        docs = json.loads(out.read_text())
        assert len(docs) == 2
        assert docs[0]["r"] > 0 > docs[1]["r"]

    def test_zero_rows_dropped_before_fit(self, tmp_path, capsys):
        data = list(sample_power_law(1000, 1.5, 1.0, seed=3)) + [0.0, 0.0]
        path = self.shares_csv(tmp_path, "z.csv", data)
        assert main(["fit", path]) == 0
        assert json.loads(capsys.readouterr().out)["n"] == 1000

    def test_bad_header_fails(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        assert main(["fit", str(path)]) == 2
        assert "miner_id" in capsys.readouterr().err
