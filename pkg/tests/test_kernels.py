"""The compiled kernels and the pure-Python fallback execute the same
code, so fixed seeds must give bit-identical trajectories across the two
paths (the fallback is selected with LOCALLEARN_NO_NUMBA=1)."""

import json
import os
import subprocess
import sys
import textwrap

import numpy as np

from locallearn import _kernels, datasets, netsim
from locallearn.rules import get_rule

_PROBE = textwrap.dedent("""
    import json
    import numpy as np
    from locallearn import _kernels, datasets, netsim
    from locallearn.rules import get_rule

    data = datasets.gaussian(5, 40, mean=0.1, cov=0.3, seed=3,
                             targets="linear")
    traj = netsim.train_unit(get_rule("oja_gradient"), data, netsim.TANH,
                             0.05, 12, seed=7, init_std=0.2)
    print(json.dumps({"numba": _kernels.USING_NUMBA,
                      "weights": traj.weights[-1].tolist()}))
""")


def _run_probe(no_numba):
    env = dict(os.environ)
    env["LOCALLEARN_NO_NUMBA"] = "1" if no_numba else "0"
    out = subprocess.run([sys.executable, "-c", _PROBE], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_fallback_is_bit_identical():
    jit = _run_probe(no_numba=False)
    plain = _run_probe(no_numba=True)
    assert jit["numba"] is True
    assert plain["numba"] is False
    assert jit["weights"] == plain["weights"]


def test_unit_kernel_matches_manual_loop():
    rng = np.random.default_rng(0)
    data = datasets.gaussian(4, 30, seed=1, targets="pm1")
    rule = get_rule("oja_clamped")
    w0 = rng.normal(size=4)
    traj = netsim.train_unit(rule, data, netsim.TANH, 0.02, 5, seed=2, w0=w0)
    # replay by hand with the same shuffles
    rng2 = np.random.default_rng(2)
    w = w0.copy()
    orders = np.stack([rng2.permutation(30) for _ in range(5)])
    from locallearn.rules import evaluate_update
    for k in range(5):
        for t in orders[k]:
            x = data.inputs[t]
            o = np.tanh(w @ x)
            dw = np.array([evaluate_update(rule, o, x[j], w=w[j],
                                           target=data.targets[t])
                           for j in range(4)])
            w = w + 0.02 * dw
    assert np.max(np.abs(w - traj.final)) < 1e-9


def test_layer_kernel_matches_unit_kernel():
    # a one-unit layer must reproduce the single-unit path exactly
    data = datasets.gaussian(4, 25, seed=4)
    rule = get_rule("simple_hebb")
    w0 = np.array([[0.1, -0.2, 0.3, 0.05]])
    weights = w0.copy()
    netsim.train_layer(rule, data.inputs, weights, 0.03, 6, seed=11,
                       transfer=netsim.TANH)
    traj = netsim.train_unit(rule, data, netsim.TANH, 0.03, 6, seed=11,
                             w0=w0[0])
    assert np.array_equal(weights[0], traj.final)
