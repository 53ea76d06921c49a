"""Sampling deep-targets training for layered (possibly non-differentiable)
networks.

The outer loop cycles through layers on a schedule.  For each visited
layer a sample of candidate activity vectors is propagated through the
fixed upper part of the network, each training example adopts the
candidate whose output lands closest to that example's final target, and
a per-layer optimizer fits the layer to those targets while everything
else stays frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netsim import LayeredNet

EXHAUSTIVE_CAP_DEFAULT = 12


@dataclass(frozen=True)
class TrainingActivities:
    """Candidate vectors are the layer's activities over the training set."""


@dataclass(frozen=True)
class LargeRandom:
    count: int = 1000
    p: float = 0.5        # probability of +1 per component


@dataclass(frozen=True)
class SmallPerturbation:
    radius: int = 1       # Hamming radius for binary layers
    count: int = 8        # perturbed candidates per example
    sigma: float = 0.1    # noise scale for continuous layers


@dataclass(frozen=True)
class Exhaustive:
    """All +-1 patterns; only applies to layers of width <= exhaustive_cap,
    and when it applies it replaces the other strategies."""


@dataclass(frozen=True)
class SamplerSpec:
    strategies: tuple = (TrainingActivities(), LargeRandom())
    sample_cap: int = 4096
    tie_break: str = "closest_to_current"   # or "random"
    exhaustive_cap: int = EXHAUSTIVE_CAP_DEFAULT

    def __post_init__(self):
        if self.tie_break not in ("closest_to_current", "random"):
            raise ValueError(f"unknown tie_break {self.tie_break!r}")


@dataclass(frozen=True)
class ScheduleSpec:
    order: str = "bottom_up"   # bottom_up | top_down | alternating | interleaved
    epochs: int = 50
    layers: tuple = ()          # explicit visit list for 'interleaved'

    def visits(self, n_layers, epoch):
        full_up = tuple(range(1, n_layers + 1))
        if self.order == "bottom_up":
            return full_up
        if self.order == "top_down":
            return tuple(reversed(full_up))
        if self.order == "alternating":
            return full_up if epoch % 2 == 0 else tuple(reversed(full_up))
        if self.order == "interleaved":
            if not self.layers:
                raise ValueError("interleaved schedule needs a layer list")
            missing = set(full_up) - set(self.layers)
            if missing:
                raise ValueError(f"schedule never visits layers {sorted(missing)}")
            return tuple(self.layers)
        raise ValueError(f"unknown schedule order {self.order!r}")


@dataclass(frozen=True)
class LayerOptimizer:
    """Per-layer optimizer run with the rest of the network fixed.

    The perceptron kind keeps a pocket: when the selected targets are not
    exactly realizable (e.g. examples sharing a hidden code but carrying
    noisy final targets), plain batch perceptron oscillates around the
    majority solution, so the best weights seen across the iterations are
    the ones kept.
    """

    kind: str = "perceptron"       # perceptron | delta_rule
    iterations: int = 10
    rate: float = 1.0
    distortion: str = "hamming"    # hamming | squared_error
    pocket: bool = True

    def __post_init__(self):
        if self.kind not in ("perceptron", "delta_rule"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.distortion not in ("hamming", "squared_error"):
            raise ValueError(f"unknown distortion {self.distortion!r}")


def _distortion_matrix(targets, outputs, kind):
    """D[m, s] = distortion between target row m and candidate output s."""
    if kind == "hamming":
        n = targets.shape[1]
        return (n - targets @ outputs.T) / 2.0
    diff = targets[:, None, :] - outputs[None, :, :]
    return np.einsum("msj,msj->ms", diff, diff)


def _distortion_rows(a, b, kind):
    """Row-wise distortion between two equal-shape batches."""
    if kind == "hamming":
        return (a.shape[1] - np.einsum("ij,ij->i", a, b)) / 2.0
    d = a - b
    return np.einsum("ij,ij->i", d, d)


def rule_to_target(f_value, o_post, o_pre, eta):
    """Invert a local rule value into the per-unit target it encodes:
    T = F/(eta * o_pre) + o_post.  Needs nonzero presynaptic activity."""
    if o_pre == 0.0:
        raise ZeroDivisionError("presynaptic activity must be nonzero")
    return f_value / (eta * o_pre) + o_post


def _upper_forward(net, h, samples):
    """Propagate candidate layer-h activities through layers h+1..L."""
    acts = np.asarray(samples, dtype=np.float64)
    for k in range(h, net.n_layers):
        xb = np.hstack([np.ones((acts.shape[0], 1)), acts])
        acts = net.transfers[k](xb @ net.weights[k].T)
    return acts


def _all_patterns(width):
    codes = np.arange(2 ** width)
    bits = (codes[:, None] >> np.arange(width)[None, :]) & 1
    return (2.0 * bits - 1.0)


def _shared_pool(net, h, acts_h, sampler, rng):
    """Assemble the shared candidate pool for layer h (no per-example rows)."""
    width = net.layer_sizes[h]
    strategies = sampler.strategies
    if any(isinstance(s, Exhaustive) for s in strategies) \
            and width <= sampler.exhaustive_cap:
        pool = _all_patterns(width)
    else:
        parts = []
        for s in strategies:
            if isinstance(s, TrainingActivities):
                parts.append(acts_h)
            elif isinstance(s, LargeRandom):
                parts.append(np.where(rng.random((s.count, width)) < s.p,
                                      1.0, -1.0))
            elif isinstance(s, (Exhaustive, SmallPerturbation)):
                continue
            else:
                raise TypeError(f"unknown strategy {s!r}")
        if not parts:
            raise ValueError("sampler produced an empty sample set")
        pool = np.vstack(parts)
    if pool.shape[0] > sampler.sample_cap:
        pool = pool[:sampler.sample_cap]
    return pool


def _perturbed_candidates(current, strategy, rng):
    """Per-example candidates within a Hamming ball (binary layers) or a
    Gaussian neighborhood (continuous layers)."""
    m, width = current.shape
    binary = np.all(np.abs(current) == 1.0)
    cands = np.repeat(current[:, None, :], strategy.count, axis=1).copy()
    if binary:
        for c in range(strategy.count):
            k = rng.integers(1, strategy.radius + 1, size=m)
            for row in range(m):
                idx = rng.choice(width, size=k[row], replace=False)
                cands[row, c, idx] *= -1.0
    else:
        cands += rng.normal(0.0, strategy.sigma, size=cands.shape)
    return cands


def sample_target(net, h, input_vec, final_target, sampler, seed,
                  activity_pool=None):
    """Deep target for one example at layer h (1-based, h = L allowed).

    activity_pool supplies the layer's training-set activities for the
    TrainingActivities strategy.  The current activity is always a
    candidate, so the selected target never propagates to a worse output
    than the current one.
    """
    if not 1 <= h <= net.n_layers:
        raise ValueError("layer index out of range")
    rng = np.random.default_rng(seed)
    final_target = np.asarray(final_target, dtype=np.float64)
    acts = net.forward(np.asarray(input_vec, dtype=np.float64))
    current = acts[h]
    width = net.layer_sizes[h]
    rows = [current[None, :]]
    if any(isinstance(s, Exhaustive) for s in sampler.strategies) \
            and width <= sampler.exhaustive_cap:
        rows.append(_all_patterns(width))
    else:
        for s in sampler.strategies:
            if isinstance(s, TrainingActivities):
                if activity_pool is None:
                    raise ValueError(
                        "TrainingActivities strategy needs an activity_pool")
                rows.append(np.asarray(activity_pool, dtype=np.float64))
            elif isinstance(s, LargeRandom):
                rows.append(np.where(rng.random((s.count, width)) < s.p,
                                     1.0, -1.0))
            elif isinstance(s, SmallPerturbation):
                rows.append(_perturbed_candidates(current[None, :], s, rng)[0])
    pool = np.vstack(rows)
    if pool.shape[0] > sampler.sample_cap:
        pool = pool[:sampler.sample_cap]
    outs = _upper_forward(net, h, pool)
    kind = "hamming" if np.all(np.abs(final_target) == 1.0) else "squared_error"
    dist = _distortion_matrix(final_target[None, :], outs, kind)[0]
    best = dist.min()
    opts = np.where(dist == best)[0]
    if len(opts) == 1 or sampler.tie_break == "random":
        pick = int(rng.choice(opts))
    else:
        layer_dist = _distortion_rows(pool[opts],
                                      np.repeat(current[None, :], len(opts),
                                                axis=0), kind)
        pick = int(opts[np.argmin(layer_dist)])
    return pool[pick].copy()


def optimize_layer(net, h, prev_acts, targets, theta):
    """Run the layer optimizer on layer h with everything else fixed.

    Batch updates over all examples at once; perceptron form
    W += rate * (T - O)' [1 X], delta rule scales by f'(S) and the batch
    mean.  Returns the updated weight matrix (also written into the net).
    """
    w = net.weights[h - 1]
    f = net.transfers[h - 1]
    xb = np.hstack([np.ones((prev_acts.shape[0], 1)), prev_acts])
    t = np.asarray(targets, dtype=np.float64)
    use_pocket = theta.kind == "perceptron" and theta.pocket
    if use_pocket:
        # every row of W is an independent perceptron: pocket per unit
        best_w = w.copy()
        best_err = np.sum(f(xb @ w.T) != t, axis=0)
    for _ in range(theta.iterations):
        s = xb @ w.T
        o = f(s)
        err = t - o
        if theta.kind == "perceptron":
            w += theta.rate * err.T @ xb
            if use_pocket:
                e = np.sum(f(xb @ w.T) != t, axis=0)
                improved = e < best_err
                best_err[improved] = e[improved]
                best_w[improved] = w[improved]
        else:
            w += theta.rate * (err * f.derivative(s)).T @ xb / len(xb)
    if use_pocket:
        w = best_w.copy()
    net.weights[h - 1] = w
    return w


@dataclass
class TargetsTrainResult:
    train_errors: np.ndarray   # per-component mean distortion, epoch 0 first
    test_errors: np.ndarray | None
    epochs_run: int
    net: LayeredNet = field(repr=False, default=None)


def _output_error(net, inputs, targets, kind):
    out = net.predict(inputs)
    if kind == "hamming":
        return float(np.mean(out != targets))
    return float(np.mean((out - targets) ** 2))


def train(net, data, schedule=None, sampler=None, theta=None, seed=0,
          test_data=None, targets=None):
    """Deep-targets training of a layered net (threshold gates welcome).

    ``targets`` defaults to the data's own inputs (autoencoder).  Targets
    are re-sampled at every layer visit against the freshest upper
    network.  Examples sharing an identical lower activity vector receive
    a common target minimizing their summed final distortion.
    """
    schedule = schedule or ScheduleSpec()
    sampler = sampler or SamplerSpec()
    theta = theta or LayerOptimizer()
    rng = np.random.default_rng(seed)
    x = np.asarray(data.inputs, dtype=np.float64)
    if targets is None:
        targets = data.targets if data.targets is not None else x
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim == 1:
        t = t[:, None]
    test_x = test_t = None
    if test_data is not None:
        test_x = np.asarray(test_data.inputs, dtype=np.float64)
        test_t = test_data.targets if test_data.targets is not None else test_x
        test_t = np.asarray(test_t, dtype=np.float64)
    kind = theta.distortion
    train_errors = [_output_error(net, x, t, kind)]
    test_errors = [_output_error(net, test_x, test_t, kind)] \
        if test_x is not None else None
    n_layers = net.n_layers
    for epoch in range(schedule.epochs):
        for h in schedule.visits(n_layers, epoch):
            acts = net.forward_batch(x)
            prev = acts[h - 1]
            if h == n_layers:
                layer_targets = t
            else:
                layer_targets = _select_targets(net, h, acts[h], prev, t,
                                                sampler, rng, kind)
            optimize_layer(net, h, prev, layer_targets, theta)
        train_errors.append(_output_error(net, x, t, kind))
        if test_x is not None:
            test_errors.append(_output_error(net, test_x, test_t, kind))
    return TargetsTrainResult(
        train_errors=np.array(train_errors),
        test_errors=np.array(test_errors) if test_errors is not None else None,
        epochs_run=schedule.epochs, net=net)


def _select_targets(net, h, acts_h, prev, final_targets, sampler, rng, kind):
    """Batch target selection at layer h, shared pool + per-example current
    activity, with duplicate lower activities grouped (their summed final
    distortion decides one common target)."""
    m = acts_h.shape[0]
    pool = _shared_pool(net, h, acts_h, sampler, rng)
    pool_outs = _upper_forward(net, h, pool)
    dist = _distortion_matrix(final_targets, pool_outs, kind)   # (M, S)
    cur_outs = _upper_forward(net, h, acts_h)
    cur_dist = _distortion_rows(final_targets, cur_outs, kind)  # (M,)
    _, group_ids = np.unique(prev, axis=0, return_inverse=True)
    chosen = np.empty((m, pool.shape[1]))
    for g in np.unique(group_ids):
        members = np.where(group_ids == g)[0]
        row = dist[members].sum(axis=0)
        cur_total = cur_dist[members].sum()
        best = row.min()
        current = acts_h[members[0]]
        if cur_total <= best:
            chosen[members] = current
            continue
        opts = np.where(row == best)[0]
        if len(opts) == 1 or sampler.tie_break == "random":
            pick = int(rng.choice(opts))
        else:
            layer_dist = _distortion_rows(
                pool[opts], np.repeat(current[None, :], len(opts), axis=0),
                kind)
            pick = int(opts[np.argmin(layer_dist)])
        chosen[members] = pool[pick]
    return chosen


def autoencoder_experiment(epochs=100, seed=0, n_clusters=10, per_cluster=100,
                           test_per_cluster=100, n_bits=100, flip_prob=0.05,
                           widths=(100, 30, 10, 30, 100)):
    """Threshold-gate autoencoder setup: clustered +-1 data, uniform
    +-1/sqrt(fan_in) weight init with zero biases, exhaustive sampling for
    layers of width <= 12 and training-activities + 1000 random patterns
    elsewhere, ten batch perceptron iterations per layer visit."""
    from .datasets import clustered_binary_split
    from .netsim import THRESHOLD11

    rng = np.random.default_rng(seed)
    train_set, test_set = clustered_binary_split(
        n_clusters, per_cluster, test_per_cluster, n_bits, flip_prob,
        seed=int(rng.integers(2**63)))
    net = LayeredNet.create(list(widths), THRESHOLD11, init="uniform",
                            seed=int(rng.integers(2**63)))
    schedule = ScheduleSpec(order="bottom_up", epochs=epochs)
    sampler = SamplerSpec(strategies=(TrainingActivities(), LargeRandom(1000),
                                      Exhaustive()))
    theta = LayerOptimizer(kind="perceptron", iterations=10, rate=1.0,
                           distortion="hamming")
    return net, train_set, test_set, schedule, sampler, theta
