"""Timing comparison of the compiled training kernels against the pure
Python/numpy fallback.

The fallback is selected with LOCALLEARN_NO_NUMBA=1 at import time, so
each side runs in its own subprocess.  Both paths execute the same code
and produce bit-identical weights; only the wall time differs.

Usage: python benchmarks/bench_kernels.py [--epochs 300] [--units 32]
"""

import argparse
import json
import os
import subprocess
import sys
import textwrap

_WORKLOAD = textwrap.dedent("""
    import json
    import time
    import numpy as np
    from locallearn import _kernels, booleanlab, datasets, netsim
    from locallearn.rules import get_rule

    epochs = {epochs}
    units = {units}

    results = {{"numba": _kernels.USING_NUMBA}}

    # single-unit on-line training
    data = datasets.gaussian(50, 400, mean=0.1, cov=0.2, seed=0,
                             targets="linear")
    netsim.train_unit(get_rule("oja_gradient"), data, netsim.TANH, 1e-3,
                      2, seed=1)   # warm-up / compile
    t0 = time.perf_counter()
    traj = netsim.train_unit(get_rule("oja_gradient"), data, netsim.TANH,
                             1e-3, epochs, seed=1)
    results["unit_train_s"] = time.perf_counter() - t0
    results["unit_checksum"] = float(np.sum(traj.final))

    # unsupervised layer training
    xb = np.hstack([np.ones((400, 1)), data.inputs])
    w = np.random.default_rng(2).uniform(-1, 1, size=(units, 51))
    netsim.train_layer(get_rule("oja"), xb, w.copy(), 1e-3, 2, seed=3,
                       transfer=netsim.TANH)
    t0 = time.perf_counter()
    netsim.train_layer(get_rule("oja"), xb, w, 1e-3, epochs // 4, seed=3,
                       transfer=netsim.TANH)
    results["layer_train_s"] = time.perf_counter() - t0
    results["layer_checksum"] = float(np.sum(w))

    # boolean deep-census trials (the census hot path)
    f = booleanlab.BooleanFunction(3, tuple(
        1 if bin(r).count("1") % 2 else -1 for r in range(8)))
    cfg = booleanlab.CensusConfig(restarts=256, seed=4)
    booleanlab.learnable(f, "oja", "two_layer", seed=5,
                         config=booleanlab.CensusConfig(restarts=8, seed=4))
    t0 = time.perf_counter()
    booleanlab.learnable(f, "oja", "two_layer", seed=5, config=cfg)
    results["census_trials_s"] = time.perf_counter() - t0

    print(json.dumps(results))
""")


def run_side(no_numba, epochs, units):
    env = dict(os.environ)
    env["LOCALLEARN_NO_NUMBA"] = "1" if no_numba else "0"
    code = _WORKLOAD.format(epochs=epochs, units=units)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--epochs", type=int, default=300)
    parser.add_argument("--units", type=int, default=32)
    args = parser.parse_args()
    jit = run_side(False, args.epochs, args.units)
    plain = run_side(True, args.epochs, args.units)
    if not jit["numba"]:
        print("numba unavailable; both sides ran the fallback")
    for key in ("unit_train_s", "layer_train_s", "census_trials_s"):
        speedup = plain[key] / jit[key] if jit[key] > 0 else float("inf")
        print(f"{key:18s} numba {jit[key]:8.3f}s   fallback "
              f"{plain[key]:8.3f}s   speedup x{speedup:.1f}")
    for key in ("unit_checksum", "layer_checksum"):
        match = "identical" if jit[key] == plain[key] else "MISMATCH"
        print(f"{key:18s} {match}")


if __name__ == "__main__":
    main()
