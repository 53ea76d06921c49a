"""Stochastic simulation ground truth: single units and layered feedforward
networks trained on-line with polynomial local rules."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .datasets import TrainingSet
from .rules import MissingTargetError, pack_monomials

TRANSFER_KINDS = ("linear", "logistic01", "tanh11", "threshold01", "threshold11")
_TRANSFER_CODES = {k: i for i, k in enumerate(TRANSFER_KINDS)}


class NonDifferentiableError(ValueError):
    pass


@dataclass(frozen=True)
class TransferFunction:
    kind: str = "linear"
    slope: float = 1.0

    def __post_init__(self):
        if self.kind not in TRANSFER_KINDS:
            raise ValueError(f"unknown transfer kind {self.kind!r}")

    @property
    def code(self):
        return _TRANSFER_CODES[self.kind]

    @property
    def is_differentiable(self):
        return self.kind in ("linear", "logistic01", "tanh11")

    def __call__(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.kind == "linear":
            return s.copy()
        if self.kind == "logistic01":
            return 1.0 / (1.0 + np.exp(-self.slope * s))
        if self.kind == "tanh11":
            return np.tanh(self.slope * s)
        if self.kind == "threshold01":
            # ties at 0 resolve to the high value, never to 0
            return np.where(s >= 0.0, 1.0, 0.0)
        return np.where(s >= 0.0, 1.0, -1.0)

    def derivative(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.kind == "linear":
            return np.ones_like(s)
        if self.kind == "logistic01":
            o = self(s)
            return self.slope * o * (1.0 - o)
        if self.kind == "tanh11":
            o = self(s)
            return self.slope * (1.0 - o * o)
        raise NonDifferentiableError(
            f"{self.kind} is not differentiable; use PALR/PWLR or a steep "
            "sigmoid surrogate")


LINEAR = TransferFunction("linear")
LOGISTIC = TransferFunction("logistic01")
TANH = TransferFunction("tanh11")
THRESHOLD01 = TransferFunction("threshold01")
THRESHOLD11 = TransferFunction("threshold11")


class OpCounter:
    """Counter of elementary operations, all at unit cost."""

    __slots__ = ("multiply_adds", "transfer_evals", "derivative_evals", "other")

    def __init__(self):
        self.multiply_adds = 0
        self.transfer_evals = 0
        self.derivative_evals = 0
        self.other = 0

    @property
    def total(self):
        return (self.multiply_adds + self.transfer_evals
                + self.derivative_evals + self.other)


class LayeredNet:
    """Feedforward net; weight matrix h has shape (N_h, N_{h-1}+1) with the
    bias in column 0.  ``shared_groups`` ties weight entries together (used
    for recurrent unfolding): a group is a list of (layer, row, col) triples
    that always hold identical values."""

    def __init__(self, layer_sizes, weights, transfers, shared_groups=None):
        self.layer_sizes = list(layer_sizes)
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.transfers = list(transfers)
        self.shared_groups = shared_groups or []
        if len(self.weights) != len(self.layer_sizes) - 1:
            raise ValueError("need one weight matrix per adaptive layer")
        if len(self.transfers) != len(self.weights):
            raise ValueError("need one transfer function per adaptive layer")
        for h, w in enumerate(self.weights):
            want = (self.layer_sizes[h + 1], self.layer_sizes[h] + 1)
            if w.shape != want:
                raise ValueError(f"layer {h + 1} weights must have shape {want}")

    @classmethod
    def create(cls, layer_sizes, transfers, init="normal", scale=0.1, seed=0):
        """Random net; init 'normal' (std=scale), 'uniform' over
        +-1/sqrt(fan_in) with zero bias, or 'zeros'."""
        rng = np.random.default_rng(seed)
        if not isinstance(transfers, (list, tuple)):
            transfers = [transfers] * (len(layer_sizes) - 1)
        weights = []
        for h in range(len(layer_sizes) - 1):
            shape = (layer_sizes[h + 1], layer_sizes[h] + 1)
            if init == "normal":
                w = rng.normal(0.0, scale, size=shape)
            elif init == "uniform":
                bound = 1.0 / np.sqrt(layer_sizes[h])
                w = rng.uniform(-bound, bound, size=shape)
                w[:, 0] = 0.0
            elif init == "zeros":
                w = np.zeros(shape)
            else:
                raise ValueError(f"unknown init {init!r}")
            weights.append(w)
        return cls(layer_sizes, weights, list(transfers))

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def n_weights(self):
        return sum(w.size for w in self.weights)

    def copy(self):
        return LayeredNet(self.layer_sizes, [w.copy() for w in self.weights],
                          list(self.transfers),
                          copy.deepcopy(self.shared_groups))

    def sync_shared(self):
        """Force every shared group to a single value (the group mean)."""
        for group in self.shared_groups:
            vals = [self.weights[h][i, j] for h, i, j in group]
            v = float(np.mean(vals))
            for h, i, j in group:
                self.weights[h][i, j] = v

    def forward(self, x, counter=None, return_pre=False):
        """Activations for a single input; returns [input, O^1, ..., O^L]."""
        acts, pres = self._propagate(np.asarray(x, dtype=np.float64)[None, :],
                                     counter)
        acts = [a[0] for a in acts]
        if return_pre:
            return acts, [p[0] for p in pres]
        return acts

    def forward_batch(self, x, counter=None, return_pre=False):
        acts, pres = self._propagate(np.asarray(x, dtype=np.float64), counter)
        if return_pre:
            return acts, pres
        return acts

    def _propagate(self, x, counter):
        if x.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"input width {x.shape[1]} != {self.layer_sizes[0]}")
        acts = [x]
        pres = []
        for w, f in zip(self.weights, self.transfers):
            xb = np.hstack([np.ones((acts[-1].shape[0], 1)), acts[-1]])
            s = xb @ w.T
            acts.append(f(s))
            pres.append(s)
            if counter is not None:
                counter.multiply_adds += w.size * x.shape[0]
                counter.transfer_evals += s.size
        return acts, pres

    def predict(self, x, counter=None):
        return self.forward_batch(x, counter)[-1]


def forward(net, x, counter=None):
    return net.forward(x, counter)


def _resolve_etas(eta_schedule, epochs):
    if callable(eta_schedule):
        return np.array([float(eta_schedule(k)) for k in range(epochs)])
    if isinstance(eta_schedule, tuple) and eta_schedule[0] == "linear":
        eta0 = float(eta_schedule[1])
        return eta0 * (1.0 - np.arange(epochs) / max(epochs, 1))
    arr = np.asarray(eta_schedule, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(epochs, float(arr))
    if arr.shape != (epochs,):
        raise ValueError("eta schedule array must have one entry per epoch")
    return arr.copy()


@dataclass
class UnitTrajectory:
    """Per-epoch weight snapshots of a single trained unit."""

    weights: np.ndarray          # (epochs+1, N), row 0 = initial
    norms: np.ndarray
    angles_to_centroid: np.ndarray
    etas: np.ndarray

    @property
    def final(self):
        return self.weights[-1]


def _angles(snapshots, centroid):
    c_norm = np.linalg.norm(centroid)
    norms = np.linalg.norm(snapshots, axis=1)
    if c_norm == 0.0:
        return np.full(snapshots.shape[0], np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosines = (snapshots @ centroid) / (norms * c_norm)
    return np.arccos(np.clip(cosines, -1.0, 1.0))


def train_unit(rule, data, transfer, eta_schedule=0.01, epochs=50, seed=0,
               w0=None, init_std=0.1):
    """On-line training of one unit with randomized presentation order.

    Deterministic for a fixed seed: the seed drives both the weight
    initialization (when w0 is not given) and the per-epoch shuffles.
    """
    x = np.ascontiguousarray(data.inputs)
    m, n = x.shape
    if rule.is_supervised:
        if data.targets is None:
            raise MissingTargetError("supervised rule needs targets")
        t = np.ascontiguousarray(data.targets, dtype=np.float64).reshape(m)
        has_t = True
    else:
        t = np.zeros(1)
        has_t = False
    rng = np.random.default_rng(seed)
    if w0 is None:
        w = rng.normal(0.0, init_std, size=n)
    else:
        w = np.array(w0, dtype=np.float64).copy()
        if w.shape != (n,):
            raise ValueError("w0 has the wrong length")
    etas = _resolve_etas(eta_schedule, epochs)
    orders = np.stack([rng.permutation(m) for _ in range(epochs)]) \
        if epochs else np.zeros((0, m), dtype=np.int64)
    orders = orders.astype(np.int64)
    snapshots = np.zeros((epochs + 1, n))
    coeffs, e_t, e_o, e_pre, e_w = pack_monomials(rule)
    _kernels.unit_online_train(x, t, has_t, w, etas, orders,
                               transfer.code, transfer.slope,
                               coeffs, e_t, e_o, e_pre, e_w, snapshots)
    centroid = x.mean(axis=0)
    return UnitTrajectory(weights=snapshots,
                          norms=np.linalg.norm(snapshots, axis=1),
                          angles_to_centroid=_angles(snapshots, centroid),
                          etas=etas)


def train_layer(rule, inputs, weights, eta_schedule, epochs, seed, transfer):
    """On-line unsupervised training of a layer of units (in place).

    ``inputs`` already includes the bias column if the weights expect one.
    """
    if rule.is_supervised:
        raise MissingTargetError("layer training uses unsupervised rules only")
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    m = x.shape[0]
    rng = np.random.default_rng(seed)
    etas = _resolve_etas(eta_schedule, epochs)
    orders = np.stack([rng.permutation(m) for _ in range(epochs)]) \
        if epochs else np.zeros((0, m), dtype=np.int64)
    orders = orders.astype(np.int64)
    coeffs, _e_t, e_o, e_pre, e_w = pack_monomials(rule, supervised_allowed=False)
    _kernels.layer_online_train(x, weights, etas, orders,
                                transfer.code, transfer.slope,
                                coeffs, e_o, e_pre, e_w)
    return weights


@dataclass
class DeepLocalConfig:
    epochs: int = 48
    eta0: float = 0.1
    schedule: str = "linear"   # 'linear' decay or 'constant'
    seed: int = 0
    init_std: float = 0.1


def train_deep_local(net, hidden_rule, top_rule, data, config=None):
    """Layer-by-layer local learning: unsupervised rules in every hidden
    layer (starting nearest the input), a supervised rule at the top."""
    config = config or DeepLocalConfig()
    if hidden_rule.is_supervised:
        raise MissingTargetError("hidden layers must use an unsupervised rule")
    if top_rule.is_supervised and data.targets is None:
        raise MissingTargetError("supervised top rule needs targets")
    targets = data.targets
    if targets is not None:
        targets = np.asarray(targets, dtype=np.float64)
        if targets.ndim == 1:
            targets = targets[:, None]
    sched = (config.eta0 if config.schedule == "constant"
             else ("linear", config.eta0))
    rng = np.random.default_rng(config.seed)
    acts = data.inputs
    for h in range(net.n_layers - 1):
        xb = np.hstack([np.ones((acts.shape[0], 1)), acts])
        train_layer(hidden_rule, xb, net.weights[h], sched, config.epochs,
                    rng.integers(2**63), net.transfers[h])
        acts = net.transfers[h](xb @ net.weights[h].T)
    # top layer, one supervised unit at a time
    xb = np.hstack([np.ones((acts.shape[0], 1)), acts])
    top = net.n_layers - 1
    top_set_inputs = np.ascontiguousarray(xb)
    for u in range(net.layer_sizes[-1]):
        tvec = targets[:, u] if targets is not None else None
        sub = TrainingSet(top_set_inputs, tvec)
        traj = train_unit(top_rule, sub, net.transfers[top], sched,
                          config.epochs, seed=rng.integers(2**63),
                          w0=net.weights[top][u])
        net.weights[top][u] = traj.final
    return net
