"""Unified experiment runner.

Every run validates its parameters strictly (unknown keys are rejected),
derives all randomness from the configured seed, and writes its artifacts
plus a manifest (config + sha256) so outputs are regenerable
bit-identically.  Exit codes: 0 success, 1 runtime failure, 2 bad config.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import booleanlab, channel, datasets, deep_targets, hopfield, moments, \
    netsim, reproduce, rules, ssh


class ConfigError(ValueError):
    pass


def _take(doc, schema, where):
    """Pull params out of a dict against {key: default}; None = required.
    Unknown keys are rejected."""
    doc = dict(doc)
    out = {}
    for key, default in schema.items():
        if key in doc:
            out[key] = doc.pop(key)
        elif default is None:
            raise ConfigError(f"{where}: missing required key {key!r}")
        else:
            out[key] = default
    if doc:
        raise ConfigError(f"{where}: unknown keys {sorted(doc)}")
    return out


def _config_hash(doc):
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _out_dir(args, experiment):
    base = Path(args.out) if args.out else Path("artifacts") / experiment
    base.mkdir(parents=True, exist_ok=True)
    return base


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _write_manifest(out_dir, experiment, config, seed, artifacts):
    doc = {"experiment": experiment, "config": config, "seed": seed,
           "config_sha256": _config_hash({"experiment": experiment,
                                          "config": config, "seed": seed}),
           "artifacts": sorted(artifacts)}
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2,
                                                      sort_keys=True))


def _load_config(args, default=None):
    if args.config:
        try:
            return json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    return dict(default or {})


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_rules(args):
    if args.action == "list":
        cat = rules.catalog()
        print(f"{'name':38s} {'n':>2s} {'d':>2s} supervised")
        for name, rule in sorted(cat.items()):
            n, d = rules.classify_degrees(rule)
            print(f"{name:38s} {n:2d} {d:2d} {rule.is_supervised}")
        return 0
    if args.action == "classify":
        if args.rule:
            rule = rules.get_rule(args.rule)
        elif args.config:
            rule = rules.LearningRule.from_json(Path(args.config).read_text())
        else:
            raise ConfigError("classify needs --rule or --config")
        n, d = rules.classify_degrees(rule)
        print(json.dumps({"name": rule.name, "n": n, "d": d,
                          "supervised": rule.is_supervised}))
        return 0
    if args.action == "transform":
        coeffs = rules.QuadraticCoefficients(args.alpha, args.beta,
                                             args.gamma, args.delta)
        out = rules.range_transform(coeffs, args.from_range)
        print(json.dumps({"alpha": out.alpha, "beta": out.beta,
                          "gamma": out.gamma, "delta": out.delta}))
        return 0
    raise ConfigError(f"unknown rules action {args.action!r}")


_DATASET_SCHEMA = {"kind": None}


def _dataset_from_config(doc, seed, where="dataset"):
    if "kind" not in doc:
        raise ConfigError(f"{where}: needs a generator 'kind'")
    try:
        return datasets.generate(doc, seed=seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def cmd_moments(args):
    cfg = _load_config(args)
    if args.action == "compute":
        params = _take(cfg, {"dataset": None}, "moments compute")
        data = _dataset_from_config(params["dataset"], args.seed)
        mom = moments.compute_moments(data)
        out = _out_dir(args, "moments")
        (out / "moments.json").write_text(mom.to_json())
        _write_manifest(out, "moments-compute", params, args.seed,
                        ["moments.json"])
        print(out / "moments.json")
        return 0
    if args.action == "predict":
        params = _take(cfg, {"dataset": None, "rule": None, "eta": 0.001,
                             "epochs": 50, "w0_std": 0.1}, "moments predict")
        data = _dataset_from_config(params["dataset"], args.seed)
        mom = moments.compute_moments(data)
        rule = rules.get_rule(params["rule"])
        rng = np.random.default_rng(args.seed)
        w0 = rng.normal(0.0, params["w0_std"], size=mom.n_features)
        traj = moments.predicted_unit_trajectory(
            rule, mom, w0, params["eta"], params["epochs"], data.n_examples)
        out = _out_dir(args, "moments")
        header = ["epoch"] + [f"w_{i}" for i in range(mom.n_features)]
        _write_csv(out / "trajectory.csv", header,
                   [[k] + list(traj[k]) for k in range(len(traj))])
        _write_manifest(out, "moments-predict", params, args.seed,
                        ["trajectory.csv"])
        print(out / "trajectory.csv")
        return 0
    raise ConfigError(f"unknown moments action {args.action!r}")


def cmd_simulate(args):
    cfg = _load_config(args)
    params = _take(cfg, {"dataset": None, "rule": None, "transfer": "linear",
                         "eta": 0.01, "epochs": 50, "init_std": 0.1},
                   "simulate")
    data = _dataset_from_config(params["dataset"], args.seed)
    rule = rules.get_rule(params["rule"])
    transfer = netsim.TransferFunction(params["transfer"])
    traj = netsim.train_unit(rule, data, transfer, params["eta"],
                             params["epochs"], seed=args.seed,
                             init_std=params["init_std"])
    out = _out_dir(args, "simulate")
    n = traj.weights.shape[1]
    header = ["epoch", "norm", "angle_to_centroid"] + \
        [f"w_{i}" for i in range(n)]
    rows = [[k, traj.norms[k], traj.angles_to_centroid[k]] +
            list(traj.weights[k]) for k in range(len(traj.norms))]
    _write_csv(out / "trajectory.csv", header, rows)
    _write_manifest(out, "simulate", params, args.seed, ["trajectory.csv"])
    print(out / "trajectory.csv")
    return 0


def _census_rows_csv(out, name, rows):
    _write_csv(out / name,
               ["fan_in", "rule", "shallow", "deep", "total", "restarts",
                "seed"],
               [[r.fan_in, r.rule_name, r.shallow_count, r.deep_count,
                 r.total, r.restarts, r.seed] for r in rows])


def cmd_boolean(args):
    config = booleanlab.CensusConfig(restarts=args.restarts,
                                     shallow_restarts=args.shallow_restarts,
                                     seed=args.seed)
    rule_names = args.rules.split(",") if args.rules else \
        ("simple_hebb", "oja", "new_rule")
    rows = booleanlab.census(args.n, args.monotone, rule_names, config,
                             threads=args.threads)
    out = _out_dir(args, "boolean")
    _census_rows_csv(out, "census.csv", rows)
    _write_manifest(out, "boolean-census",
                    {"n": args.n, "monotone": args.monotone,
                     "rules": list(rule_names), "restarts": args.restarts},
                    args.seed, ["census.csv"])
    for r in rows:
        print(f"n={r.fan_in} {r.rule_name}: shallow {r.shallow_count}/"
              f"{r.total} deep {r.deep_count}/{r.total}")
    return 0


def cmd_ssh(args):
    cfg = _load_config(args)
    params = _take(cfg, {"dataset": None, "with_bias": False, "epochs": 100,
                         "eta": 0.1}, "ssh")
    data = _dataset_from_config(params["dataset"], args.seed)
    out = _out_dir(args, "ssh")
    cset = ssh.canonicalize(data, params["with_bias"])
    report = ssh.criteria(cset)
    doc = {"flags": report.flags.__dict__,
           "row_sums": report.row_sums.tolist(),
           "cos_matrix": report.cos_matrix.tolist(),
           "degenerate_rows": report.degenerate_rows.tolist()}
    artifacts = ["report.json"]
    if args.action == "verify":
        res = ssh.predict_and_verify(data, params["with_bias"],
                                     epochs=params["epochs"],
                                     eta=params["eta"], seed=args.seed)
        doc["predicted"] = res.predicted
        doc["empirical"] = res.empirical
        doc["ambiguous"] = res.ambiguous
        acc = ssh.accuracy_trajectory(data, params["with_bias"],
                                      eta=params["eta"],
                                      epochs=params["epochs"])
        _write_csv(out / "accuracy.csv", ["epoch", "training_accuracy"],
                   [[k, acc[k]] for k in range(len(acc))])
        artifacts.append("accuracy.csv")
    (out / "report.json").write_text(json.dumps(doc, indent=2))
    _write_manifest(out, f"ssh-{args.action}", params, args.seed, artifacts)
    print(out / "report.json")
    return 0


def cmd_deep_targets(args):
    cfg = _load_config(args, default={"epochs": 100})
    params = _take(cfg, {"epochs": 100, "widths": [100, 30, 10, 30, 100],
                         "n_clusters": 10, "per_cluster": 100,
                         "test_per_cluster": 100, "n_bits": 100,
                         "flip_prob": 0.05, "iterations": 10, "rate": 1.0},
                   "deep-targets train")
    net, train_set, test_set, schedule, sampler, theta = \
        deep_targets.autoencoder_experiment(
            epochs=params["epochs"], seed=args.seed,
            n_clusters=params["n_clusters"],
            per_cluster=params["per_cluster"],
            test_per_cluster=params["test_per_cluster"],
            n_bits=params["n_bits"], flip_prob=params["flip_prob"],
            widths=tuple(params["widths"]))
    theta = deep_targets.LayerOptimizer(kind=theta.kind,
                                        iterations=params["iterations"],
                                        rate=params["rate"],
                                        distortion=theta.distortion)
    res = deep_targets.train(net, train_set, schedule=schedule,
                             sampler=sampler, theta=theta,
                             seed=args.seed + 1, test_data=test_set)
    out = _out_dir(args, "deep-targets")
    rows = [[k, res.train_errors[k], res.test_errors[k]]
            for k in range(len(res.train_errors))]
    _write_csv(out / "errors.csv", ["epoch", "train_error", "test_error"],
               rows)
    checkpoint = {"format_version": 1,
                  "layer_sizes": net.layer_sizes,
                  "weights": [w.tolist() for w in net.weights],
                  "transfers": [f.kind for f in net.transfers]}
    (out / "checkpoint.json").write_text(json.dumps(checkpoint))
    _write_manifest(out, "deep-targets-train", params, args.seed,
                    ["errors.csv", "checkpoint.json"])
    print(f"train {res.train_errors[0]:.4f} -> {res.train_errors[-1]:.4f}; "
          f"test {res.test_errors[0]:.4f} -> {res.test_errors[-1]:.4f}")
    print(out / "errors.csv")
    return 0


def _table8_csv(out, name, rows):
    _write_csv(out / name,
               ["algorithm", "I_W", "C_W", "R", "O_expr", "O_value"],
               [[r.algorithm, r.I_W, r.C_W, r.R, r.O_expr, r.O_value]
                for r in rows])


def cmd_channel(args):
    out = _out_dir(args, "channel")
    if args.action == "table8":
        rows = channel.table8(args.w, args.n_units, args.k, args.d_bits)
        _table8_csv(out, "table8.csv", rows)
        _write_manifest(out, "channel-table8",
                        {"W": args.w, "N": args.n_units, "K": args.k,
                         "D": args.d_bits}, args.seed, ["table8.csv"])
        for r in rows:
            print(f"{r.algorithm:6s} I_W={r.I_W:10.4g} C_W={r.C_W:8.4g} "
                  f"R={r.R:10.4g} O={r.O_expr} (= {r.O_value:.4g})")
        return 0
    if args.action == "run":
        net = channel.single_unit_net(args.w, seed=args.seed)
        rng = np.random.default_rng(args.seed)
        x = rng.normal(size=net.layer_sizes[0])
        tgt = np.array([0.5])
        alg = channel.ChannelAlgorithm(args.alg, k=args.k)
        rep = channel.run(alg, net, x, tgt, seed=args.seed)
        doc = {"algorithm": rep.algorithm, "I_W": rep.I_W, "C_W": rep.C_W,
               "R": rep.R, "O_emp": rep.O_emp, "O_theory": rep.O_theory,
               "ops": rep.ops, "grad_norm": rep.grad_norm}
        (out / "report.json").write_text(json.dumps(doc, indent=2))
        _write_manifest(out, "channel-run", {"alg": args.alg, "W": args.w,
                                             "K": args.k}, args.seed,
                        ["report.json"])
        print(json.dumps(doc))
        return 0
    if args.action == "scale":
        sizes = [int(s) for s in args.sizes.split(",")]
        res = channel.scaling_study(args.alg, sizes, trials=args.trials,
                                    seed=args.seed, vary=args.vary,
                                    k=args.k)
        trial_rows = []
        for size, trial, o_emp, ops in res.rows:
            w = size if args.vary == "W" else 1024
            k = args.k if args.vary == "W" else size
            trial_rows.append([args.alg, w, 1, k, trial, o_emp, ops,
                               args.d_bits])
        _write_csv(out / "scaling.csv",
                   ["alg", "W", "N", "K", "trial", "O_emp", "ops", "bits"],
                   trial_rows)
        doc = {"algorithm": args.alg, "vary": args.vary,
               "sizes": res.sizes.tolist(),
               "mean_abs_O": res.mean_abs_o.tolist(),
               "slope": res.slope, "stderr": res.stderr, "r2": res.r2}
        (out / "fit.json").write_text(json.dumps(doc, indent=2))
        _write_manifest(out, "channel-scale",
                        {"alg": args.alg, "sizes": sizes,
                         "trials": args.trials, "vary": args.vary,
                         "K": args.k}, args.seed,
                        ["scaling.csv", "fit.json"])
        print(json.dumps({k: doc[k] for k in ("slope", "stderr", "r2")}))
        return 0
    raise ConfigError(f"unknown channel action {args.action!r}")


def cmd_hopfield(args):
    out = _out_dir(args, "hopfield")
    rng = np.random.default_rng(args.seed)
    states = hopfield.states_matrix(args.n)
    mems = states[rng.integers(0, 2 ** args.n, size=args.memories)]
    if args.action == "store":
        net = hopfield.store(mems)
        (out / "weights.json").write_text(json.dumps(
            {"n": args.n, "memories": mems.tolist(),
             "weights": net.weights.tolist()}))
        _write_manifest(out, "hopfield-store",
                        {"n": args.n, "memories": args.memories}, args.seed,
                        ["weights.json"])
        print(out / "weights.json")
        return 0
    if args.action == "orient":
        if args.n > 8:
            raise ConfigError("edge-list export capped at n = 8")
        net = hopfield.store(mems)
        orient = hopfield.orientation(net)
        rows = []
        for c in range(2 ** args.n):
            for b in range(args.n):
                d = int(orient.directions[c, b])
                if c < c ^ (1 << b):
                    rows.append([c, c ^ (1 << b),
                                 {1: "down", -1: "up", 0: "tie"}[d]])
        _write_csv(out / "orientation.csv",
                   ["state", "neighbor", "direction"], rows)
        _write_manifest(out, "hopfield-orient",
                        {"n": args.n, "memories": args.memories}, args.seed,
                        ["orientation.csv"])
        print(out / "orientation.csv")
        return 0
    if args.action == "commute":
        trials = args.trials
        bad = 0
        for _ in range(trials):
            k = int(rng.integers(1, 5))
            mem = states[rng.integers(0, 2 ** args.n, size=k)]
            h = hopfield.random_isometry(args.n, rng)
            if not hopfield.commutes(mem, h):
                bad += 1
        doc = {"n": args.n, "trials": trials, "violations": bad}
        (out / "commute.json").write_text(json.dumps(doc))
        _write_manifest(out, "hopfield-commute", {"n": args.n,
                                                  "trials": trials},
                        args.seed, ["commute.json"])
        print(json.dumps(doc))
        return 0 if bad == 0 else 1
    if args.action == "uniqueness":
        coeffs = (args.alpha, args.beta, args.gamma)
        res = hopfield.uniqueness_search(args.n, coeffs, trials=args.trials,
                                         seed=args.seed)
        doc = {"coeffs": list(coeffs), "found": res.found,
               "checked": res.checked, "all_tie_sets": res.all_tie_sets}
        if res.found:
            mem, iso = res.counterexample
            doc["memories"] = np.asarray(mem).tolist()
            doc["isometry"] = {"permutation": list(iso.permutation),
                               "sign_flips": list(iso.sign_flips)}
        (out / "uniqueness.json").write_text(json.dumps(doc))
        _write_manifest(out, "hopfield-uniqueness",
                        {"n": args.n, "coeffs": list(coeffs),
                         "trials": args.trials}, args.seed,
                        ["uniqueness.json"])
        print(json.dumps({k: doc[k] for k in ("coeffs", "found", "checked")}))
        return 0
    raise ConfigError(f"unknown hopfield action {args.action!r}")


_REPRODUCE_IDS = ("table6", "table7", "table8", "fig11", "all")


def cmd_reproduce(args):
    out = _out_dir(args, "reproduce")
    if args.target == "table6":
        res = reproduce.criterion_1_boolean_census(budget=args.budget,
                                                   seed=args.seed)
        _census_rows_csv(out, "table6.csv", res.details["rows"])
        artifacts = ["table6.csv"]
    elif args.target == "table7":
        res = reproduce.criterion_2_monotone_census(budget=args.budget,
                                                    seed=args.seed)
        _census_rows_csv(out, "table7.csv", res.details["rows"])
        artifacts = ["table7.csv"]
    elif args.target == "table8":
        res = reproduce.criterion_3_table8(budget=args.budget, seed=args.seed)
        _table8_csv(out, "table8_theory.csv", res.details["table"])
        _write_csv(out / "table8_empirical.csv", ["quantity", "value"],
                   [["pwgb_slope_vs_W", res.details["pwgb_slope"]],
                    ["pwgrk_slope_vs_K", res.details["pwgrk_slope"]],
                    ["pwgbk_sqrtlog_r2", res.details["pwgbk_r2"]],
                    ["bp_o_emp", res.details["bp_o_emp"]],
                    ["pwlr_direction_gap", res.details["pwlr_direction_gap"]]])
        artifacts = ["table8_theory.csv", "table8_empirical.csv"]
    elif args.target == "fig11":
        res = reproduce.criterion_8_autoencoder(budget=args.budget,
                                                seed=args.seed)
        tr = res.details["train_errors"]
        te = res.details["test_errors"]
        _write_csv(out / "fig11.csv", ["epoch", "train_error", "test_error"],
                   [[k, tr[k], te[k]] for k in range(len(tr))])
        artifacts = ["fig11.csv"]
    elif args.target == "all":
        results = reproduce.reproduce_all(budget=args.budget)
        _write_csv(out / "acceptance.csv",
                   ["criterion", "name", "passed", "seconds"],
                   [[r.cid, r.name, r.passed, round(r.seconds, 1)]
                    for r in results])
        _write_manifest(out, "reproduce-all", {"budget": args.budget},
                        args.seed, ["acceptance.csv"])
        print(out / "acceptance.csv")
        return 0 if all(r.passed for r in results) else 1
    else:
        raise ConfigError(f"unknown reproduce target {args.target!r}; "
                          f"choose from {_REPRODUCE_IDS}")
    print(res.line())
    _write_manifest(out, f"reproduce-{args.target}",
                    {"budget": args.budget}, args.seed, artifacts)
    return 0 if res.passed else 1


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="locallearn",
                                description="Local learning rules: analysis, "
                                            "simulation, and benchmarks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default=None,
                   help="output directory (default artifacts/<experiment>)")
    p.add_argument("--config", type=str, default=None,
                   help="JSON config file")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes for parallel experiments")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("rules", help="rule catalog and transforms")
    pr.add_argument("action", choices=["list", "classify", "transform"])
    pr.add_argument("--rule", type=str, default=None)
    pr.add_argument("--alpha", type=float, default=0.0)
    pr.add_argument("--beta", type=float, default=0.0)
    pr.add_argument("--gamma", type=float, default=0.0)
    pr.add_argument("--delta", type=float, default=0.0)
    pr.add_argument("--from", dest="from_range", default="[0,1]",
                    choices=[rules.RANGE_01, rules.RANGE_11])
    pr.set_defaults(func=cmd_rules)

    pm = sub.add_parser("moments", help="data moments and analytic dynamics")
    pm.add_argument("action", choices=["compute", "predict"])
    pm.set_defaults(func=cmd_moments)

    ps = sub.add_parser("simulate", help="on-line single-unit training")
    ps.set_defaults(func=cmd_simulate)

    pb = sub.add_parser("boolean", help="Boolean learnability census")
    pb.add_argument("action", choices=["census"])
    pb.add_argument("--n", type=int, required=True)
    pb.add_argument("--monotone", action="store_true")
    pb.add_argument("--rules", type=str, default=None,
                    help="comma-separated rule names")
    pb.add_argument("--restarts", type=int, default=4096)
    pb.add_argument("--shallow-restarts", type=int, default=128)
    pb.set_defaults(func=cmd_boolean)

    ph = sub.add_parser("ssh", help="clamped-Hebb learnability analysis")
    ph.add_argument("action", choices=["analyze", "verify"])
    ph.set_defaults(func=cmd_ssh)

    pd = sub.add_parser("deep-targets", help="sampling deep-targets training")
    pd.add_argument("action", choices=["train"])
    pd.set_defaults(func=cmd_deep_targets)

    pc = sub.add_parser("channel", help="learning-channel benchmark")
    pc.add_argument("action", choices=["run", "scale", "table8"])
    pc.add_argument("--alg", type=str, default="PWGB",
                    choices=list(channel.ALGORITHMS))
    pc.add_argument("--w", type=int, default=256)
    pc.add_argument("--n-units", type=int, default=32)
    pc.add_argument("--k", type=int, default=16)
    pc.add_argument("--d-bits", type=int, default=64)
    pc.add_argument("--sizes", type=str, default="64,256,1024")
    pc.add_argument("--trials", type=int, default=1000)
    pc.add_argument("--vary", type=str, default="W", choices=["W", "K"])
    pc.set_defaults(func=cmd_channel)

    po = sub.add_parser("hopfield", help="Hopfield isometry invariance")
    po.add_argument("action",
                    choices=["store", "orient", "commute", "uniqueness"])
    po.add_argument("--n", type=int, default=4)
    po.add_argument("--memories", type=int, default=3)
    po.add_argument("--trials", type=int, default=1000)
    po.add_argument("--alpha", type=float, default=1.0)
    po.add_argument("--beta", type=float, default=0.0)
    po.add_argument("--gamma", type=float, default=0.0)
    po.set_defaults(func=cmd_hopfield)

    pp = sub.add_parser("reproduce",
                        help="reproduce the published tables and figures")
    pp.add_argument("target", choices=list(_REPRODUCE_IDS))
    pp.add_argument("--budget", choices=[reproduce.QUICK, reproduce.FULL],
                    default=reproduce.QUICK)
    pp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - structured CLI failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
