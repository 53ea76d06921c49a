"""Acceptance criteria, runnable as a suite (CLI `reproduce`) or one at a
time from the tests.  Each criterion returns a CriterionResult carrying
the measured values so failures are diagnosable."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import booleanlab, channel, datasets, deep_targets, hopfield, moments, \
    netsim, rules, ssh

QUICK, FULL = "quick", "full"


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    seconds: float
    details: dict = field(default_factory=dict)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.cid}: {self.name} ({self.seconds:.1f}s)"


def _timed(cid, name, fn):
    t0 = time.time()
    passed, details = fn()
    return CriterionResult(cid, name, bool(passed), time.time() - t0, details)


# ---------------------------------------------------------------------------
# 1 & 2: Boolean censuses
# ---------------------------------------------------------------------------

def _census_config(budget, seed):
    restarts = 4096 if budget == FULL else 1024
    return booleanlab.CensusConfig(restarts=restarts, shallow_restarts=128,
                                   seed=seed)


def criterion_1_boolean_census(budget=FULL, seed=20240):
    want = {2: (14, 16, 16), 3: (104, 256, 256)}

    def check():
        cfg = _census_config(budget, seed)
        details = {"rows": []}
        ok = True
        for n, (w_sh, w_dp, w_tot) in want.items():
            sep = sum(booleanlab.linearly_separable(f)
                      for f in booleanlab.enumerate_functions(n))
            for row in booleanlab.census(n, False, config=cfg):
                details["rows"].append(row)
                ok &= (row.shallow_count == w_sh == sep
                       and row.deep_count == w_dp and row.total == w_tot)
        return ok, details

    return _timed(1, "Boolean census (all functions, fan-in 2-3)", check)


def criterion_2_monotone_census(budget=FULL, seed=20241):
    want = {2: (6, 6, 6), 3: (20, 20, 20), 4: (150, 168, 168)}

    def check():
        cfg = _census_config(budget, seed)
        details = {"rows": []}
        ok = True
        for n, (w_sh, w_dp, w_tot) in want.items():
            for row in booleanlab.census(n, True, config=cfg):
                details["rows"].append(row)
                ok &= (row.shallow_count == w_sh and row.deep_count == w_dp
                       and row.total == w_tot)
        return ok, details

    return _timed(2, "Monotone census (fan-in 2-4)", check)


# ---------------------------------------------------------------------------
# 3 & 4: learning-channel scaling and optimality
# ---------------------------------------------------------------------------

def criterion_3_table8(budget=FULL, seed=20242):
    trials = 1000 if budget == FULL else 300

    def check():
        details = {}
        rows = channel.table8(n_weights=1024, n_units=32, k=16, d_bits=64)
        details["table"] = rows
        res = channel.scaling_study("PWGB", [64, 256, 1024], trials=trials,
                                    seed=seed)
        details["pwgb_slope"] = res.slope
        ok = abs(res.slope + 0.5) <= 0.1
        res = channel.scaling_study("PWGRK", [4, 16, 64], trials=trials,
                                    seed=seed + 1, vary="K", w_fixed=1024)
        details["pwgrk_slope"] = res.slope
        ok &= abs(res.slope - 0.5) <= 0.1
        ks = [2, 4, 8, 16, 32, 64]
        means = [channel.scaling_study("PWGBK", [256], trials=max(trials // 2, 200),
                                       seed=seed + 2 + i, k=k).mean_abs_o[0]
                 for i, k in enumerate(ks)]
        _, _, r2 = channel.sqrt_log_fit(ks, means)
        details["pwgbk_r2"] = r2
        ok &= r2 >= 0.9
        rng = np.random.default_rng(seed)
        net = channel.make_test_net(8, [6, 4], seed=seed)
        x = rng.normal(size=8)
        tgt = np.array([0.3])
        rep_bp = channel.run(channel.ChannelAlgorithm("BP"), net, x, tgt,
                             seed=seed)
        details["bp_o_emp"] = rep_bp.O_emp
        ok &= rep_bp.O_emp == 1.0
        rep = channel.run(channel.ChannelAlgorithm("PWLR", epsilon=1e-6),
                          net, x, tgt, seed=seed)
        gap = float(np.linalg.norm(rep.step_unit_vector
                                   - rep_bp.step_unit_vector))
        details["pwlr_direction_gap"] = gap
        ok &= gap <= 1e-4
        return ok, details

    return _timed(3, "Table-8 scaling reproduction", check)


def criterion_4_optimality(budget=FULL, seed=0):
    def check():
        details = {"cells": 0}
        ok = True
        for w in (10**2, 10**3, 10**4, 10**5, 10**6):
            for n in (10, 100, 1000):
                for k in (1, 10, 100, 1000):
                    for d in (16, 32, 64):
                        rows = {r.algorithm: r
                                for r in channel.table8(w, n, k, d)}
                        bp = rows["BP"]
                        ok &= bp.R == d and bp.O_value == 1.0
                        for name, r in rows.items():
                            ok &= r.R <= bp.R + 1e-12
                            ok &= r.O_value <= bp.O_value + 1e-12
                        details["cells"] += 1
        return ok, details

    return _timed(4, "Backprop rate/improvement dominance", check)


# ---------------------------------------------------------------------------
# 5: analytic vs simulated dynamics
# ---------------------------------------------------------------------------

D1_SUPPORTED_RULES = (
    "simple_hebb", "anti_hebb", "clamped_hebb", "gradient", "perceptron",
    "fixed_decay", "fixed_decay_clamped", "fixed_decay_gradient",
    "presynaptic_decay", "presynaptic_decay_clamped",
    "presynaptic_decay_gradient", "oja_clamped_target",
)


def criterion_5_dynamics(budget=FULL, seed=20245):
    n_feat, m, eta, epochs = 10, 500, 1e-3, 50

    def check():
        data = datasets.gaussian(n_feat, m, mean=0.1, cov=0.04, seed=seed,
                                 targets="linear")
        mom = moments.compute_moments(data)
        rng = np.random.default_rng(seed)
        w0 = rng.normal(0.0, 0.1, size=n_feat)
        details = {"max_rel": {}}
        ok = True
        for name in D1_SUPPORTED_RULES:
            rule = rules.get_rule(name)
            pred = moments.predicted_unit_trajectory(rule, mom, w0, eta,
                                                     epochs, m)
            traj = netsim.train_unit(rule, data, netsim.LINEAR, eta, epochs,
                                     seed=seed + 1, w0=w0)
            rels = [np.linalg.norm(traj.weights[k] - pred[k])
                    / max(np.linalg.norm(pred[k]), 1e-12)
                    for k in range(1, epochs + 1)]
            details["max_rel"][name] = max(rels)
            ok &= max(rels) <= 0.05
        # weight-saturating rule against its Riccati solution
        r_data = datasets.gaussian(8, m, mean=0.1, cov=0.05, seed=seed + 2)
        r_mom = moments.compute_moments(r_data)
        r_eta = 1e-4
        traj = netsim.train_unit(rules.get_rule("input_saturation"), r_data,
                                 netsim.LINEAR, r_eta, epochs=300,
                                 seed=seed + 3, w0=np.zeros(8))
        worst = 0.0
        for k in (50, 150, 300):
            for i in range(8):
                pred = moments.riccati_solution(r_eta * m, r_mom.mu[i], 0.0, k)
                worst = max(worst, abs(pred - traj.weights[k][i]))
        details["riccati_max_dev"] = worst
        ok &= worst <= 0.05
        return ok, details

    return _timed(5, "Analytic vs simulated weight dynamics", check)


# ---------------------------------------------------------------------------
# 6: gradient correctness
# ---------------------------------------------------------------------------

def criterion_6_gradients(budget=FULL, seed=20246):
    def check():
        rng = np.random.default_rng(seed)
        details = {"max_rel": 0.0, "bptt_max_rel": 0.0}
        ok = True
        shapes = ([6, 1], [6, 5, 1], [6, 5, 4, 1], [6, 5, 4, 3, 1])
        for i, widths in enumerate(shapes):
            net = channel.make_test_net(widths[0], widths[1:-1], seed=seed + i,
                                        out_width=widths[-1])
            x = rng.normal(size=widths[0])
            tgt = rng.uniform(-0.5, 0.5, size=widths[-1])
            g_layers, _ = channel.backprop_gradient(net, x, tgt)
            g = np.concatenate([gl.ravel() for gl in g_layers])
            fd = channel.finite_difference_gradient(net, x, tgt, eps=1e-5,
                                                    mode="central")
            scale = np.maximum(np.abs(g), 1e-6 * np.abs(g).max())
            rel = float(np.max(np.abs(fd - g) / scale))
            details["max_rel"] = max(details["max_rel"], rel)
            ok &= rel <= 1e-5
        # three-neuron recurrent net unfolded over up to 10 steps
        r = rng.normal(0.0, 0.4, size=(3, 3))
        np.fill_diagonal(r, 0.0)
        for length in (1, 4, 10):
            net = channel.unfold(r, length)
            x = rng.normal(size=3)
            targets = {min(2, length): rng.normal(size=3),
                       length: rng.normal(size=3)}
            bptt, _ = channel.shared_group_gradient(net, x, targets)
            fd = channel.shared_group_fd(net, x, targets, eps=1e-6)
            scale = np.maximum(np.abs(bptt), 1e-6 * np.abs(bptt).max())
            rel = float(np.max(np.abs(fd - bptt) / scale))
            details["bptt_max_rel"] = max(details["bptt_max_rel"], rel)
            ok &= rel <= 1e-5
        return ok, details

    return _timed(6, "Gradient and BPTT correctness", check)


# ---------------------------------------------------------------------------
# 7: supervised-simple-Hebb learnability theorems
# ---------------------------------------------------------------------------

def _random_consistent_binary(rng, n_max=10, m_max=20):
    while True:
        n = int(rng.integers(3, n_max + 1))
        m = int(rng.integers(2, m_max + 1))
        x = rng.choice([-1.0, 1.0], size=(m, n))
        t = rng.choice([-1.0, 1.0], size=m)
        data = datasets.TrainingSet(x, t)
        try:
            ssh.canonicalize(data, with_bias=False)
        except ssh.InconsistentSetError:
            continue
        return data


def criterion_7_ssh(budget=FULL, seed=20247):
    def check():
        rng = np.random.default_rng(seed)
        agree = 0
        total = 200
        details = {}
        for _ in range(total):
            data = _random_consistent_binary(rng)
            res = ssh.predict_and_verify(data, with_bias=False, epochs=64,
                                         eta=0.1)
            # equal-length binary data: the row-sum branch always applies
            if res.predicted is not None and res.predicted == res.empirical:
                agree += 1
        details["agreement"] = agree / total
        ok = agree == total
        # sufficient branches must never claim learnable falsely
        false_pos = 0
        for i in range(40):
            n = int(rng.integers(4, 9))
            scale = math.sqrt(n)
            ortho = datasets.TrainingSet(scale * np.eye(n),
                                         rng.choice([-1.0, 1.0], size=n))
            res = ssh.predict_and_verify(ortho, with_bias=False)
            if res.predicted and not res.empirical:
                false_pos += 1
            cols = rng.uniform(0.1, 1.0, size=(6, n)) \
                * rng.choice([-1.0, 1.0], size=(1, n))
            orthant = datasets.TrainingSet(cols, np.ones(6))
            res = ssh.predict_and_verify(orthant, with_bias=False)
            if res.predicted and not res.empirical:
                false_pos += 1
        details["false_positives"] = false_pos
        ok &= false_pos == 0
        return ok, details

    return _timed(7, "Clamped-Hebb learnability verdicts", check)


# ---------------------------------------------------------------------------
# 8: deep-targets autoencoder
# ---------------------------------------------------------------------------

def criterion_8_autoencoder(budget=FULL, seed=20248):
    epochs = 100 if budget == FULL else 30

    def check():
        net, train_set, test_set, schedule, sampler, theta = \
            deep_targets.autoencoder_experiment(epochs=epochs, seed=seed)
        res = deep_targets.train(net, train_set, schedule=schedule,
                                 sampler=sampler, theta=theta, seed=seed + 1,
                                 test_data=test_set)
        tr0, tr1 = res.train_errors[0], res.train_errors[-1]
        te0, te1 = res.test_errors[0], res.test_errors[-1]
        # error floor: reconstructing each example by its cluster centroid
        # leaves exactly the flipped-bit fraction
        cents = train_set.metadata["centroids"]
        labels = train_set.metadata["labels"]
        floor = float(np.mean(train_set.inputs != cents[labels]))
        details = {"train_initial": tr0, "train_final": tr1,
                   "test_initial": te0, "test_final": te1,
                   "noise_floor": floor,
                   "train_errors": res.train_errors,
                   "test_errors": res.test_errors}
        ok = abs(tr0 - 0.5) < 0.05
        ok &= (tr0 - tr1) / tr0 >= 0.80
        ok &= (te0 - te1) / te0 >= 0.60
        if budget == FULL:
            ok &= tr1 <= floor + 0.005
        return ok, details

    return _timed(8, "Deep-targets threshold autoencoder", check)


# ---------------------------------------------------------------------------
# 9: Hopfield isometry invariance
# ---------------------------------------------------------------------------

def criterion_9_hopfield(budget=FULL, seed=20249):
    def check():
        details = {}
        ok = True
        if budget == FULL:
            subsets, isos, bad = hopfield.exhaustive_commutation_check(4)
            details["n4_exhaustive"] = (subsets, isos, bad)
            ok &= bad == 0
        else:
            subsets, isos, bad = hopfield.exhaustive_commutation_check(3)
            details["n3_exhaustive"] = (subsets, isos, bad)
            ok &= bad == 0
        rng = np.random.default_rng(seed)
        states8 = hopfield.states_matrix(8)
        bad8 = 0
        for _ in range(1000):
            k = int(rng.integers(1, 6))
            mem = states8[rng.integers(0, 256, size=k)]
            h = hopfield.random_isometry(8, rng)
            if not hopfield.commutes(mem, h):
                bad8 += 1
        details["n8_random_violations"] = bad8
        ok &= bad8 == 0
        for coeffs in ((1, 1, 0), (1, 0, 1)):
            found = False
            for n in (2, 3, 4):
                res = hopfield.uniqueness_search(n, coeffs, trials=600,
                                                 seed=seed)
                if res.found:
                    found = True
                    break
            details[f"violation_{coeffs}"] = found
            ok &= found
        res = hopfield.uniqueness_search(3, (1, 0, 0), trials=800, seed=seed)
        details["hebb_clean"] = not res.found
        ok &= not res.found
        return ok, details

    return _timed(9, "Hopfield isometry invariance", check)


# ---------------------------------------------------------------------------
# 10: rule algebra and range transform
# ---------------------------------------------------------------------------

PUBLISHED_DEGREE_LABELS = {
    "simple_hebb": (2, 1),
    "oja": (3, 3),
    "new_rule": (4, 3),
    "clamped_hebb": (2, 0),
    "gradient": (2, 1),
    "input_saturation": (3, 2),
}


def criterion_10_rule_algebra(budget=FULL, seed=20250):
    def check():
        rng = np.random.default_rng(seed)
        details = {}
        ok = True
        worst = 0.0
        for _ in range(200):
            c = rules.QuadraticCoefficients(*rng.normal(size=4))
            fwd = rules.range_transform(c, rules.RANGE_01)
            back = rules.range_transform(fwd, rules.RANGE_11)
            worst = max(worst, float(np.max(np.abs(back.as_array()
                                                   - c.as_array()))))
        details["round_trip_worst"] = worst
        ok &= worst <= 1e-12
        for name, want in PUBLISHED_DEGREE_LABELS.items():
            got = rules.classify_degrees(rules.get_rule(name))
            ok &= got == want
        extra = rules.LearningRule(terms=(rules.RuleTerm(
            1.0, exp_post=2, exp_pre=1, exp_weight=1),))
        ok &= rules.classify_degrees(extra) == (4, 3)
        details["degrees_ok"] = ok
        # gradient-rule range equivalence: same inputs, remapped targets,
        # tanh weights track half the logistic weights exactly
        x = rng.choice([0.0, 1.0], size=(40, 6))
        t01 = rng.choice([0.0, 1.0], size=40)
        d01 = datasets.TrainingSet(x, t01).with_bias()
        d11 = datasets.TrainingSet(x, 2.0 * t01 - 1.0).with_bias()
        w0 = rng.normal(0.0, 0.2, size=7)
        eta = 0.05
        tr01 = netsim.train_unit(rules.get_rule("gradient"), d01,
                                 netsim.LOGISTIC, eta, epochs=20, seed=seed,
                                 w0=w0)
        tr11 = netsim.train_unit(rules.get_rule("gradient_tanh"), d11,
                                 netsim.TANH, eta / 8.0, epochs=20, seed=seed,
                                 w0=w0 / 2.0)
        dev = float(np.max(np.abs(tr11.weights - tr01.weights / 2.0)))
        details["range_equivalence_dev"] = dev
        ok &= dev <= 1e-10
        return ok, details

    return _timed(10, "Rule algebra, range transform, gradient-rule "
                      "equivalence", check)


ALL_CRITERIA = (
    criterion_1_boolean_census, criterion_2_monotone_census,
    criterion_3_table8, criterion_4_optimality, criterion_5_dynamics,
    criterion_6_gradients, criterion_7_ssh, criterion_8_autoencoder,
    criterion_9_hopfield, criterion_10_rule_algebra,
)


def reproduce_all(budget=QUICK, echo=print):
    """Run every acceptance criterion at the chosen budget."""
    if budget not in (QUICK, FULL):
        raise ValueError(f"unknown budget {budget!r}")
    results = []
    for fn in ALL_CRITERIA:
        res = fn(budget=budget)
        results.append(res)
        if echo:
            echo(res.line())
    return results
