"""Exhaustive Boolean learnability census for small fan-in threshold units.

Enumerates (monotone) Boolean functions of up to 4 inputs, decides exact
linear separability with an integer weight enumeration (LP feasibility is
available as an independent oracle), and measures which functions a
single threshold unit or an unsupervised+supervised two-layer stack can
actually learn with a given local rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels, netsim, rules
from .datasets import boolean_inputs, boolean_table

ALL_FUNCTIONS_CAP = 3
MONOTONE_CAP = 4

# unsupervised hidden rule paired with the error-driven supervised variant.
# The clamped variants move only along the canonical data mean, which
# provably cannot reach every linearly separable function (row-sum
# criterion); the (T-O)-form variants are true perceptron-style learners
# and reproduce the published shallow counts exactly.
RULE_VARIANTS = {
    "simple_hebb": (rules.simple_hebb, rules.gradient),
    "oja": (rules.oja, rules.oja_gradient),
    "new_rule": (rules.new_rule, rules.new_rule_gradient),
}


@dataclass(frozen=True)
class BooleanFunction:
    n_inputs: int
    truth_table: tuple  # +-1 outputs, row r ordered as boolean_inputs

    def __post_init__(self):
        if len(self.truth_table) != 2 ** self.n_inputs:
            raise ValueError("table length must be 2^n")
        if any(v not in (-1, 1) for v in self.truth_table):
            raise ValueError("table entries must be +-1")

    @property
    def code(self):
        size = 2 ** self.n_inputs
        c = 0
        for r, v in enumerate(self.truth_table):
            if v > 0:
                c |= 1 << (size - 1 - r)
        return c

    @property
    def table_array(self):
        return np.array(self.truth_table, dtype=np.float64)

    def is_monotone(self):
        n = self.n_inputs
        for r in range(2 ** n):
            for j in range(n):
                bit = 1 << (n - 1 - j)
                if not r & bit and self.truth_table[r | bit] < self.truth_table[r]:
                    return False
        return True


def _tables_for_codes(n, codes):
    size = 2 ** n
    codes = np.asarray(codes, dtype=np.int64)
    shifts = size - 1 - np.arange(size)
    bits = (codes[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def enumerate_functions(n, monotone_only=False):
    """Complete, duplicate-free enumeration; monotone functions are found
    by filtering the full table list with the pointwise predicate."""
    cap = MONOTONE_CAP if monotone_only else ALL_FUNCTIONS_CAP
    if n > cap:
        raise ValueError(f"n={n} above the cap {cap}")
    size = 2 ** n
    tables = _tables_for_codes(n, np.arange(2 ** size))
    if monotone_only:
        mask = np.ones(len(tables), dtype=bool)
        for r in range(size):
            for j in range(n):
                bit = 1 << (n - 1 - j)
                if not r & bit:
                    mask &= tables[:, r | bit] >= tables[:, r]
        tables = tables[mask]
    return [BooleanFunction(n, tuple(int(v) for v in row)) for row in tables]


# ---------------------------------------------------------------------------
# Linear separability oracles
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _separable_codes(n):
    """Codes of all threshold functions of n inputs, by exhaustive search
    over integer weights.  Known minimal realizations for fan-in <= 4 need
    weights no larger than 3 (and a bias within the weight span), so the
    +-5 grid is sufficient; only tie-free weight vectors count."""
    wmax = 5
    bmax = n * wmax + 1
    x = boolean_inputs(n).astype(np.int64)
    size = 2 ** n
    w_grid = np.array(list(itertools.product(range(-wmax, wmax + 1), repeat=n)),
                      dtype=np.int64)
    margins0 = w_grid @ x.T
    powers = (1 << np.arange(size - 1, -1, -1)).astype(np.int64)
    codes = set()
    for b in range(-bmax, bmax + 1):
        m = margins0 + b
        ok = np.all(m != 0, axis=1)
        if not np.any(ok):
            continue
        cs = ((m[ok] > 0).astype(np.int64)) @ powers
        codes.update(int(c) for c in cs)
    return frozenset(codes)


def linearly_separable(f):
    """Exact verdict from the cached integer-weight enumeration."""
    if f.n_inputs > 4:
        raise ValueError("separability oracle capped at n = 4")
    return f.code in _separable_codes(f.n_inputs)


def separable_lp(f):
    """Independent oracle: feasibility of t_r (w . x_r + b) >= 1."""
    from scipy.optimize import linprog

    x = boolean_inputs(f.n_inputs)
    t = f.table_array
    n = f.n_inputs
    # variables: w (n) then b
    a_ub = -t[:, None] * np.hstack([x, np.ones((len(t), 1))])
    b_ub = -np.ones(len(t))
    res = linprog(c=np.zeros(n + 1), A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * (n + 1), method="highs")
    return bool(res.status == 0)


# ---------------------------------------------------------------------------
# Learnability by actual training
# ---------------------------------------------------------------------------

@dataclass
class CensusConfig:
    """Knobs for the learnability runs.

    Weights start uniform in (-init_scale, init_scale): bounded-weight
    rules require |w| <= 1 starts, and a spread-out init keeps the hidden
    threshold functions diverse across restarts.
    """

    restarts: int = 64
    shallow_restarts: int | None = None  # default: same as restarts
    epochs: int = 48
    eta0: float = 0.1
    hidden_eta0: float = 0.01   # gentler unsupervised phase keeps features diverse
    init_scale: float = 1.0
    hidden_width: int | None = None   # default 2^n
    seed: int = 0


def _resolve_rules(rule):
    if isinstance(rule, str):
        unsup, sup = RULE_VARIANTS[rule]
        return unsup(), sup()
    if isinstance(rule, tuple):
        return rule
    raise TypeError("rule must be a name or an (unsupervised, supervised) pair")


def _orders_block(rng, batch, epochs, m):
    flat = np.tile(np.arange(m, dtype=np.int64), (batch * epochs, 1))
    return rng.permuted(flat, axis=1).reshape(batch, epochs, m)


_TRIAL_BATCH = 64


def learnable(f, rule, depth="shallow", restarts=None, seed=0, config=None):
    """True iff any restart reproduces the full truth table exactly.

    The verdict uses strict threshold margins: a restart whose trained net
    leaves any training input exactly on a unit boundary does not count
    (no ambiguous tau(0) cases).  Restarts run in batches through the
    compiled trial kernels with an early exit on the first success.
    """
    config = config or CensusConfig()
    if restarts is not None:
        config = CensusConfig(**{**config.__dict__, "restarts": restarts})
    unsup_rule, sup_rule = _resolve_rules(rule)
    if depth not in ("shallow", "two_layer"):
        raise ValueError(f"unknown depth {depth!r}")
    n = f.n_inputs
    data = boolean_table(n, f.table_array)
    data_b = data.with_bias()
    xb = np.ascontiguousarray(data_b.inputs)
    t = np.ascontiguousarray(data_b.targets)
    m = xb.shape[0]
    width = config.hidden_width or 2 ** n
    decay = 1.0 - np.arange(config.epochs) / config.epochs
    etas = config.eta0 * decay
    etas_hidden = config.hidden_eta0 * decay
    s_pack = rules.pack_monomials(sup_rule)
    u_pack = rules.pack_monomials(unsup_rule, supervised_allowed=False)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0 if depth == "shallow" else 1]))
    scale = config.init_scale
    budget = config.restarts
    if depth == "shallow" and config.shallow_restarts is not None:
        budget = config.shallow_restarts
    done = 0
    while done < budget:
        batch = min(_TRIAL_BATCH, budget - done)
        if depth == "shallow":
            w_inits = rng.uniform(-scale, scale, size=(batch, n + 1))
            orders = _orders_block(rng, batch, config.epochs, m)
            hit = _kernels.boolean_shallow_trials(
                xb, t, w_inits, orders, etas,
                s_pack[0], s_pack[1], s_pack[2], s_pack[3], s_pack[4])
        else:
            h_inits = rng.uniform(-scale, scale, size=(batch, width, n + 1))
            t_inits = rng.uniform(-scale, scale, size=(batch, width + 1))
            h_orders = _orders_block(rng, batch, config.epochs, m)
            t_orders = _orders_block(rng, batch, config.epochs, m)
            hit = _kernels.boolean_deep_trials(
                xb, t, h_inits, t_inits, h_orders, t_orders,
                etas_hidden, etas,
                u_pack[0], u_pack[2], u_pack[3], u_pack[4],
                s_pack[0], s_pack[1], s_pack[2], s_pack[3], s_pack[4])
        if hit >= 0:
            return True
        done += batch
    return False


@dataclass
class CensusRow:
    fan_in: int
    rule_name: str
    shallow_count: int
    deep_count: int
    total: int
    restarts: int
    seed: int


def _census_verdicts(n, monotone_only, rule_name, rule_index, config, indices):
    """Verdicts for one rule over a slice of the function list."""
    functions = enumerate_functions(n, monotone_only)
    out = []
    for fi in indices:
        f = functions[fi]
        base = [config.seed, rule_index, fi]
        s_shallow = int(np.random.SeedSequence(base + [0]).generate_state(1)[0])
        s_deep = int(np.random.SeedSequence(base + [1]).generate_state(1)[0])
        out.append((fi,
                    learnable(f, rule_name, "shallow", seed=s_shallow,
                              config=config),
                    learnable(f, rule_name, "two_layer", seed=s_deep,
                              config=config)))
    return out


def census(n, monotone_only=False, rule_names=("simple_hebb", "oja", "new_rule"),
           config=None, threads=1):
    """Count shallow- and deep-learnable functions per rule.

    Per-function seeds derive from (census seed, rule index, function
    index), so the verdicts are identical however the work is split;
    threads > 1 fans the function list out across worker processes.
    """
    config = config or CensusConfig()
    functions = enumerate_functions(n, monotone_only)
    out = []
    for ri, name in enumerate(rule_names):
        indices = list(range(len(functions)))
        if threads > 1:
            from concurrent.futures import ProcessPoolExecutor
            chunks = [indices[i::threads] for i in range(threads)]
            with ProcessPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_census_verdicts, n, monotone_only,
                                       name, ri, config, chunk)
                           for chunk in chunks if chunk]
                verdicts = [v for fut in futures for v in fut.result()]
        else:
            verdicts = _census_verdicts(n, monotone_only, name, ri, config,
                                        indices)
        shallow = sum(1 for _, s, _ in verdicts if s)
        deep = sum(1 for _, _, d in verdicts if d)
        out.append(CensusRow(fan_in=n, rule_name=name, shallow_count=shallow,
                             deep_count=deep, total=len(functions),
                             restarts=config.restarts, seed=config.seed))
    return out
