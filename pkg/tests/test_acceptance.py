"""Acceptance gate: every criterion at its stated tolerance, one line each.

Run `pytest tests/test_acceptance.py -v -s` for the per-criterion report;
the same checks back the CLI's `reproduce all --budget full`.
"""

import pytest

from locallearn import reproduce


def _run(fn):
    res = fn(budget=reproduce.FULL)
    print(res.line())
    return res


def _fmt(details):
    out = {}
    for k, v in details.items():
        if isinstance(v, float):
            out[k] = round(v, 6)
        elif isinstance(v, (bool, int, tuple, str)):
            out[k] = v
    return out


class TestAcceptance:
    def test_criterion_01_boolean_census(self):
        res = _run(reproduce.criterion_1_boolean_census)
        counts = {(r.fan_in, r.rule_name):
                  (r.shallow_count, r.deep_count, r.total)
                  for r in res.details["rows"]}
        for rule in ("simple_hebb", "oja", "new_rule"):
            assert counts[(2, rule)] == (14, 16, 16)
            assert counts[(3, rule)] == (104, 256, 256)
        assert res.passed, _fmt(res.details)
        assert res.seconds <= 300

    def test_criterion_02_monotone_census(self):
        res = _run(reproduce.criterion_2_monotone_census)
        counts = {(r.fan_in, r.rule_name):
                  (r.shallow_count, r.deep_count, r.total)
                  for r in res.details["rows"]}
        for rule in ("simple_hebb", "oja", "new_rule"):
            assert counts[(2, rule)] == (6, 6, 6)
            assert counts[(3, rule)] == (20, 20, 20)
            assert counts[(4, rule)] == (150, 168, 168)
        assert res.passed
        assert res.seconds <= 900

    def test_criterion_03_table8(self):
        res = _run(reproduce.criterion_3_table8)
        d = res.details
        assert abs(d["pwgb_slope"] + 0.5) <= 0.1, d["pwgb_slope"]
        assert abs(d["pwgrk_slope"] - 0.5) <= 0.1, d["pwgrk_slope"]
        assert d["pwgbk_r2"] >= 0.9, d["pwgbk_r2"]
        assert d["bp_o_emp"] == 1.0
        assert d["pwlr_direction_gap"] <= 1e-4
        assert res.passed
        assert res.seconds <= 1200

    def test_criterion_04_optimality(self):
        res = _run(reproduce.criterion_4_optimality)
        assert res.passed
        assert res.details["cells"] == 5 * 3 * 4 * 3

    def test_criterion_05_dynamics(self):
        res = _run(reproduce.criterion_5_dynamics)
        for name, rel in res.details["max_rel"].items():
            assert rel <= 0.05, (name, rel)
        assert res.details["riccati_max_dev"] <= 0.05
        assert res.passed
        assert res.seconds <= 300

    def test_criterion_06_gradients(self):
        res = _run(reproduce.criterion_6_gradients)
        assert res.details["max_rel"] <= 1e-5
        assert res.details["bptt_max_rel"] <= 1e-5
        assert res.passed
        assert res.seconds <= 120

    def test_criterion_07_ssh(self):
        res = _run(reproduce.criterion_7_ssh)
        assert res.details["agreement"] == 1.0
        assert res.details["false_positives"] == 0
        assert res.passed
        assert res.seconds <= 300

    def test_criterion_08_autoencoder(self):
        res = _run(reproduce.criterion_8_autoencoder)
        d = res.details
        assert abs(d["train_initial"] - 0.5) < 0.05
        assert (d["train_initial"] - d["train_final"]) \
            / d["train_initial"] >= 0.80
        assert (d["test_initial"] - d["test_final"]) \
            / d["test_initial"] >= 0.60
        assert res.passed
        assert res.seconds <= 1800

    def test_criterion_09_hopfield(self):
        res = _run(reproduce.criterion_9_hopfield)
        assert res.details["n4_exhaustive"][2] == 0
        assert res.details["n8_random_violations"] == 0
        assert res.details["violation_(1, 1, 0)"]
        assert res.details["violation_(1, 0, 1)"]
        assert res.details["hebb_clean"]
        assert res.passed
        assert res.seconds <= 600

    def test_criterion_10_rule_algebra(self):
        res = _run(reproduce.criterion_10_rule_algebra)
        assert res.details["round_trip_worst"] <= 1e-12
        assert res.details["range_equivalence_dev"] <= 1e-10
        assert res.passed
        assert res.seconds <= 60
