import json
from pathlib import Path

import numpy as np
import pytest

from locallearn.cli import main


def run(args):
    return main([str(a) for a in args])


class TestRules:
    def test_list(self, capsys):
        assert run(["rules", "list"]) == 0
        out = capsys.readouterr().out
        assert "simple_hebb" in out and "oja" in out

    def test_classify(self, capsys):
        assert run(["rules", "classify", "--rule", "oja"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert (doc["n"], doc["d"]) == (3, 3)

    def test_transform(self, capsys):
        assert run(["rules", "transform", "--alpha", 1,
                    "--from", "[0,1]"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc == {"alpha": 4.0, "beta": -2.0, "gamma": -2.0,
                       "delta": 1.0}

    def test_unknown_rule_is_runtime_error(self, capsys):
        assert run(["rules", "classify", "--rule", "nope"]) == 1


class TestConfigHandling:
    def test_unknown_keys_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"dataset": {"kind": "gaussian",
                                               "n_features": 3,
                                               "n_examples": 10},
                                   "bogus": 1}))
        code = run(["--config", cfg, "--out", tmp_path / "o",
                    "moments", "compute"])
        assert code == 2
        assert "unknown keys" in capsys.readouterr().err

    def test_missing_required_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({}))
        code = run(["--config", cfg, "--out", tmp_path / "o",
                    "moments", "compute"])
        assert code == 2


class TestArtifacts:
    def test_moments_compute(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"dataset": {
            "kind": "gaussian", "n_features": 3, "n_examples": 20}}))
        out = tmp_path / "out"
        assert run(["--config", cfg, "--seed", 5, "--out", out,
                    "moments", "compute"]) == 0
        assert (out / "moments.json").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 5
        assert "config_sha256" in manifest

    def test_simulate_deterministic(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "dataset": {"kind": "gaussian", "n_features": 3,
                        "n_examples": 15},
            "rule": "simple_hebb", "eta": 0.01, "epochs": 4}))
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert run(["--config", cfg, "--seed", 3, "--out", out,
                        "simulate"]) == 0
            outs.append((out / "trajectory.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_boolean_census(self, tmp_path, capsys):
        out = tmp_path / "bl"
        assert run(["--seed", 7, "--out", out, "boolean", "census",
                    "--n", 2, "--restarts", 256,
                    "--rules", "simple_hebb"]) == 0
        rows = (out / "census.csv").read_text().strip().splitlines()
        assert rows[0].startswith("fan_in")
        assert rows[1].split(",")[2] == "14"

    def test_ssh_verify(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"dataset": {
            "kind": "linsep_random", "n_features": 4, "n_examples": 6},
            "with_bias": True}))
        out = tmp_path / "ssh"
        assert run(["--config", cfg, "--seed", 2, "--out", out,
                    "ssh", "verify"]) == 0
        doc = json.loads((out / "report.json").read_text())
        assert set(doc) >= {"flags", "row_sums", "predicted", "empirical"}

    def test_channel_table8(self, tmp_path):
        out = tmp_path / "ch"
        assert run(["--out", out, "channel", "table8", "--w", 100]) == 0
        text = (out / "table8.csv").read_text()
        assert "BP" in text and "PWGRK" in text

    def test_channel_scale(self, tmp_path, capsys):
        out = tmp_path / "sc"
        assert run(["--seed", 1, "--out", out, "channel", "scale",
                    "--alg", "PWGB", "--sizes", "32,128",
                    "--trials", 50]) == 0
        doc = json.loads((out / "fit.json").read_text())
        assert doc["slope"] < 0

    def test_hopfield_orient(self, tmp_path):
        out = tmp_path / "hp"
        assert run(["--seed", 4, "--out", out, "hopfield", "orient",
                    "--n", 3]) == 0
        rows = (out / "orientation.csv").read_text().strip().splitlines()
        # every hypercube edge appears once
        assert len(rows) - 1 == 3 * 2 ** 2

    def test_hopfield_uniqueness(self, tmp_path, capsys):
        out = tmp_path / "hp2"
        assert run(["--seed", 4, "--out", out, "hopfield", "uniqueness",
                    "--n", 2, "--beta", 1.0]) == 0
        doc = json.loads((out / "uniqueness.json").read_text())
        assert doc["found"] is True

    def test_deep_targets_train_small(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"epochs": 2, "widths": [12, 6, 12],
                                   "n_clusters": 2, "per_cluster": 6,
                                   "test_per_cluster": 2, "n_bits": 12}))
        out = tmp_path / "dt"
        assert run(["--config", cfg, "--seed", 6, "--out", out,
                    "deep-targets", "train"]) == 0
        lines = (out / "errors.csv").read_text().strip().splitlines()
        assert len(lines) == 4  # header + initial + 2 epochs
        ckpt = json.loads((out / "checkpoint.json").read_text())
        assert ckpt["layer_sizes"] == [12, 6, 12]
