"""The learning channel: backpropagation against six perturbation-based
descent algorithms, with instrumented operation counts, information
accounting, and the rate/improvement bookkeeping.

Conventions: g is the unit vector along the error gradient; every
algorithm reports a unit vector u estimating g (the actual descent step
is -eta*u), so the improvement O = u.g is 1 for exact gradient followers
and at most 1 for everything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .netsim import LayeredNet, NonDifferentiableError, OpCounter

ALGORITHMS = ("BP", "PWGB", "PWLR", "PWLB", "PALR", "PWGBK", "PWGRK")


@dataclass(frozen=True)
class ChannelAlgorithm:
    kind: str
    epsilon: float = 1e-6     # probe size for local perturbations
    k: int = 1                # repeat count for the K-variants
    scale: float = 1e-4       # global perturbation scale

    def __post_init__(self):
        if self.kind not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.kind!r}")
        if self.k < 1:
            raise ValueError("K must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class ChannelReport:
    algorithm: str
    I_W: float                 # bits fed back per weight
    C_W: float                 # measured elementary ops per weight
    R: float                   # I_W / C_W
    O_emp: float | None        # measured u.g (None without a gradient)
    O_theory: float | None
    step_unit_vector: np.ndarray
    grad_norm: float | None
    ops: int
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# weights <-> flat vector helpers
# ---------------------------------------------------------------------------

def flat_weights(net):
    return np.concatenate([w.ravel() for w in net.weights])


def set_flat_weights(net, vec):
    pos = 0
    for w in net.weights:
        w[...] = vec[pos:pos + w.size].reshape(w.shape)
        pos += w.size


def _as_target_dict(net, target):
    if isinstance(target, dict):
        out = {int(h): np.asarray(v, dtype=np.float64)
               for h, v in target.items()}
    else:
        out = {net.n_layers: np.asarray(target, dtype=np.float64)}
    for h, v in out.items():
        if not 1 <= h <= net.n_layers:
            raise ValueError(f"target layer {h} out of range")
        if v.shape != (net.layer_sizes[h],):
            raise ValueError(
                f"target at layer {h} must have length {net.layer_sizes[h]}")
    return out


def _loss_value(out, tgt, loss):
    if loss == "squared":
        return 0.5 * float(np.sum((out - tgt) ** 2))
    if loss == "cross_entropy":
        eps = 1e-12
        o = np.clip(out, eps, 1.0 - eps)
        return -float(np.sum(tgt * np.log(o) + (1.0 - tgt) * np.log(1.0 - o)))
    raise ValueError(f"unknown loss {loss!r}")


def error_value(net, x, target, loss="squared", counter=None):
    """Total error over (possibly multiple) target layers, op-counted."""
    targets = _as_target_dict(net, target)
    acts = net.forward(x, counter)
    total = 0.0
    for h, tgt in targets.items():
        total += _loss_value(acts[h], tgt, loss)
        if counter is not None:
            counter.other += len(tgt)
    return total


# ---------------------------------------------------------------------------
# backpropagation
# ---------------------------------------------------------------------------

def backprop_gradient(net, x, target, loss="squared", counter=None):
    """Exact dE/dw for every weight; targets may attach to any layer(s).

    Returns (per-layer gradient list, op count).  Raises on threshold
    transfers.
    """
    for f in net.transfers:
        if not f.is_differentiable:
            raise NonDifferentiableError(
                "non-differentiable transfer; use PALR/PWLR or a "
                "steep-sigmoid surrogate")
    targets = _as_target_dict(net, target)
    own_counter = counter if counter is not None else OpCounter()
    acts, pres = net.forward(x, own_counter, return_pre=True)
    grads = [np.zeros_like(w) for w in net.weights]
    d_out = None  # dE/dO at the current layer
    for h in range(net.n_layers, 0, -1):
        o = acts[h]
        if d_out is None:
            d_out = np.zeros_like(o)
        if h in targets:
            tgt = targets[h]
            if loss == "squared":
                d_out = d_out + (o - tgt)
            else:
                eps = 1e-12
                oc = np.clip(o, eps, 1.0 - eps)
                d_out = d_out + (oc - tgt) / (oc * (1.0 - oc))
            own_counter.other += len(tgt)
        fprime = net.transfers[h - 1].derivative(pres[h - 1])
        delta = d_out * fprime
        own_counter.derivative_evals += len(delta)
        own_counter.multiply_adds += len(delta)
        xb = np.concatenate([[1.0], acts[h - 1]])
        grads[h - 1] = np.outer(delta, xb)
        own_counter.multiply_adds += grads[h - 1].size
        d_out = net.weights[h - 1][:, 1:].T @ delta
        own_counter.multiply_adds += net.weights[h - 1][:, 1:].size
    return grads, own_counter.total


def finite_difference_gradient(net, x, target, loss="squared", eps=1e-6,
                               mode="forward", counter=None):
    """Per-weight finite differences (the PWLR probe), forward or central."""
    w0 = flat_weights(net)
    grad = np.zeros_like(w0)
    base = error_value(net, x, target, loss, counter)
    for i in range(len(w0)):
        wp = w0.copy()
        wp[i] += eps
        set_flat_weights(net, wp)
        ep = error_value(net, x, target, loss, counter)
        if mode == "central":
            wm = w0.copy()
            wm[i] -= eps
            set_flat_weights(net, wm)
            em = error_value(net, x, target, loss, counter)
            grad[i] = (ep - em) / (2.0 * eps)
        else:
            grad[i] = (ep - base) / eps
    set_flat_weights(net, w0)
    return grad


def shared_group_gradient(net, x, target, loss="squared"):
    """BPTT-style gradient for tied weights: per group, the sum of the
    per-copy gradients.  Returns (group gradient vector, raw grads)."""
    grads, _ = backprop_gradient(net, x, target, loss)
    out = np.zeros(len(net.shared_groups))
    for gi, group in enumerate(net.shared_groups):
        out[gi] = sum(grads[h][i, j] for h, i, j in group)
    return out, grads


def shared_group_fd(net, x, target, loss="squared", eps=1e-6):
    """Finite differences over shared groups (each group moves together)."""
    out = np.zeros(len(net.shared_groups))
    for gi, group in enumerate(net.shared_groups):
        for sign, store in ((1.0, "ep"), (-2.0, "em")):
            for h, i, j in group:
                net.weights[h][i, j] += sign * eps
            if store == "ep":
                ep = error_value(net, x, target, loss)
            else:
                em = error_value(net, x, target, loss)
        for h, i, j in group:
            net.weights[h][i, j] += eps  # restore
        out[gi] = (ep - em) / (2.0 * eps)
    return out


# ---------------------------------------------------------------------------
# the descent algorithms
# ---------------------------------------------------------------------------

def _normalized(v):
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero direction")
    return v / n


def _grad_direction(net, x, target, loss):
    g_layers, _ = backprop_gradient(net, x, target, loss)
    g = np.concatenate([gl.ravel() for gl in g_layers])
    norm = float(np.linalg.norm(g))
    return g, norm


def run(alg, net, x, target, seed=0, loss="squared", precision_bits=64):
    """Run one algorithm on one example and account for it.

    The report's u always has unit norm and points along the gradient
    estimate; O_emp = u.g needs a differentiable net (it is None
    otherwise, except for the gradient-following algorithms that require
    differentiability anyway).
    """
    rng = np.random.default_rng(seed)
    counter = OpCounter()
    w0 = flat_weights(net)
    n_weights = len(w0)
    n_units = sum(net.layer_sizes[1:])
    d_bits = precision_bits
    differentiable = all(f.is_differentiable for f in net.transfers)
    g_unit = None
    grad_norm = None
    if differentiable:
        g, grad_norm = _grad_direction(net, x, target, loss)
        g_unit = g / grad_norm
    extras = {}

    if alg.kind == "BP":
        if not differentiable:
            raise NonDifferentiableError(
                "BP needs differentiable transfers; use PALR/PWLR or a "
                "steep-sigmoid surrogate")
        _, ops = backprop_gradient(net, x, target, loss, counter)
        u = g_unit.copy()
        i_w = float(d_bits)
        o_emp = 1.0  # u coincides with g by construction
        o_theory = 1.0

    elif alg.kind == "PWGB":
        e0 = error_value(net, x, target, loss, counter)
        v = rng.normal(0.0, alg.scale / math.sqrt(n_weights), size=n_weights)
        set_flat_weights(net, w0 + v)
        e1 = error_value(net, x, target, loss, counter)
        set_flat_weights(net, w0)
        delta_e = e1 - e0
        u = _normalized(v if delta_e > 0 else -v)
        i_w = 1.0 / n_weights
        o_theory = min(1.0, math.sqrt(2.0 / math.pi) / math.sqrt(n_weights))
        # accept if the error decreased, otherwise reject (no move)
        extras["accepted"] = bool(delta_e <= 0)
        extras["realized_error_delta"] = float(min(delta_e, 0.0))
        o_emp = float(u @ g_unit) if g_unit is not None else None

    elif alg.kind == "PWLR":
        ge = np.zeros(n_weights)
        e0 = error_value(net, x, target, loss, counter)
        for i in range(n_weights):
            wp = w0.copy()
            wp[i] += alg.epsilon
            set_flat_weights(net, wp)
            ge[i] = (error_value(net, x, target, loss, counter) - e0) \
                / alg.epsilon
        set_flat_weights(net, w0)
        u = _normalized(ge)
        i_w = float(d_bits)
        o_theory = 1.0
        o_emp = float(u @ g_unit) if g_unit is not None else None
        extras["fd_gradient"] = ge

    elif alg.kind == "PWLB":
        e0 = error_value(net, x, target, loss, counter)
        signs = np.zeros(n_weights)
        for i in range(n_weights):
            wp = w0.copy()
            wp[i] += alg.epsilon
            set_flat_weights(net, wp)
            ei = error_value(net, x, target, loss, counter)
            signs[i] = 1.0 if ei > e0 else -1.0
        set_flat_weights(net, w0)
        mags = rng.uniform(0.0, math.sqrt(3.0 / n_weights), size=n_weights)
        u = _normalized(signs * mags)
        i_w = 1.0
        if g_unit is not None:
            o_emp = float(u @ g_unit)
            o_theory = float(math.sqrt(3.0 / n_weights) / 2.0
                             * np.sum(np.abs(g_unit)))
        else:
            o_emp = None
            o_theory = None

    elif alg.kind == "PALR":
        if not differentiable:
            raise NonDifferentiableError(
                "PALR reconstructs dE/dw via the chain rule and needs "
                "differentiable transfers")
        acts = net.forward(x, counter)
        e0 = error_value(net, x, target, loss, counter)
        ge_layers = [np.zeros_like(w) for w in net.weights]
        for h in range(1, net.n_layers + 1):
            for i in range(net.layer_sizes[h]):
                ep = _error_with_unit_bump(net, x, target, loss, h, i,
                                           alg.epsilon, counter)
                em = _error_with_unit_bump(net, x, target, loss, h, i,
                                           -alg.epsilon, counter)
                d_s = (ep - em) / (2.0 * alg.epsilon)
                xb = np.concatenate([[1.0], acts[h - 1]])
                ge_layers[h - 1][i] = d_s * xb
        ge = np.concatenate([gl.ravel() for gl in ge_layers])
        u = _normalized(ge)
        i_w = float(d_bits)
        o_theory = 1.0
        o_emp = float(u @ g_unit) if g_unit is not None else None

    elif alg.kind == "PWGBK":
        e0 = error_value(net, x, target, loss, counter)
        best_mag = -1.0
        best_v = None
        best_delta = 0.0
        for _ in range(alg.k):
            v = rng.normal(0.0, alg.scale / math.sqrt(n_weights),
                           size=n_weights)
            set_flat_weights(net, w0 + v)
            delta_e = error_value(net, x, target, loss, counter) - e0
            if abs(delta_e) > best_mag:
                best_mag = abs(delta_e)
                best_v = v
                best_delta = delta_e
        set_flat_weights(net, w0)
        u = _normalized(best_v if best_delta > 0 else -best_v)
        i_w = math.log2(alg.k) / n_weights if alg.k > 1 else 1.0 / n_weights
        o_theory = min(1.0, math.sqrt(max(math.log(alg.k), 0.0))
                       / math.sqrt(n_weights)) if alg.k > 1 else \
            min(1.0, math.sqrt(2.0 / math.pi) / math.sqrt(n_weights))
        o_emp = float(u @ g_unit) if g_unit is not None else None

    elif alg.kind == "PWGRK":
        e0 = error_value(net, x, target, loss, counter)
        acc = np.zeros(n_weights)
        for _ in range(alg.k):
            v = rng.normal(0.0, alg.scale / math.sqrt(n_weights),
                           size=n_weights)
            set_flat_weights(net, w0 + v)
            delta_e = error_value(net, x, target, loss, counter) - e0
            acc += delta_e * v
        set_flat_weights(net, w0)
        u = _normalized(acc)
        i_w = alg.k * d_bits / n_weights
        o_theory = min(1.0, math.sqrt(alg.k / n_weights))
        o_emp = float(u @ g_unit) if g_unit is not None else None

    else:  # pragma: no cover
        raise ValueError(alg.kind)

    ops = counter.total
    c_w = ops / n_weights
    return ChannelReport(algorithm=alg.kind, I_W=i_w, C_W=c_w,
                         R=i_w / c_w if c_w > 0 else float("inf"),
                         O_emp=o_emp, O_theory=o_theory,
                         step_unit_vector=u, grad_norm=grad_norm, ops=ops,
                         extras=extras)


def _error_with_unit_bump(net, x, target, loss, layer, unit, eps, counter):
    """Error when one unit's pre-activation is shifted by eps; implemented
    as a full forward pass with an injection at the given layer."""
    targets = _as_target_dict(net, target)
    acts = np.asarray(x, dtype=np.float64)[None, :]
    total = 0.0
    for h in range(1, net.n_layers + 1):
        xb = np.hstack([np.ones((1, 1)), acts])
        s = xb @ net.weights[h - 1].T
        if h == layer:
            s[0, unit] += eps
        acts = net.transfers[h - 1](s)
        if counter is not None:
            counter.multiply_adds += net.weights[h - 1].size
            counter.transfer_evals += s.size
        if h in targets:
            total += _loss_value(acts[0], targets[h], loss)
            if counter is not None:
                counter.other += len(targets[h])
    return total


# ---------------------------------------------------------------------------
# theoretical table, scaling studies, recurrent unfolding
# ---------------------------------------------------------------------------

@dataclass
class TableRow:
    algorithm: str
    I_W: float
    C_W: float
    R: float
    O_expr: str
    O_value: float   # numeric with unit constants, capped at 1 (u.g <= 1)


def table8(n_weights, n_units, k, d_bits):
    """Theoretical information/computation/rate/improvement per algorithm.

    Improvement entries with an unspecified constant are evaluated at
    C = 1 and capped at 1, since O = u.g can never exceed 1.
    """
    w = float(n_weights)
    n = float(n_units)
    k = float(k)
    d = float(d_bits)
    log_k = math.log(k) if k > 1 else 0.0
    log2_k = math.log2(k) if k > 1 else 0.0
    rows = [
        TableRow("PWGB", 1.0 / w, 1.0, 1.0 / w,
                 "C/sqrt(W)", min(1.0, 1.0 / math.sqrt(w))),
        TableRow("PWLR", d, w, d / w, "1", 1.0),
        TableRow("PWLB", 1.0, w, 1.0 / w,
                 "(sqrt(3/W)/2) sum|g_i|", min(1.0, math.sqrt(3.0) / 2.0)),
        TableRow("PALR", d, n, d / n, "1", 1.0),
        TableRow("PWGBK", log2_k / w, k, (log2_k / w) / k,
                 "C sqrt(log K)/sqrt(W)",
                 min(1.0, math.sqrt(log_k) / math.sqrt(w))),
        TableRow("PWGRK", k * d / w, k, d / w,
                 "C sqrt(K)/sqrt(W)", min(1.0, math.sqrt(k / w))),
        TableRow("BP", d, 1.0, d, "1", 1.0),
    ]
    return rows


def make_test_net(n_inputs, hidden, seed=0, transfer=None, out_width=1):
    """Small dense tanh net for channel trials; weights scale with 1/sqrt
    of the fan-in so the units stay out of saturation."""
    from .netsim import TANH
    transfer = transfer or TANH
    sizes = [n_inputs] + list(hidden) + [out_width]
    rng = np.random.default_rng(seed)
    weights = []
    for h in range(len(sizes) - 1):
        fan_in = sizes[h] + 1
        weights.append(rng.normal(0.0, 1.0 / math.sqrt(fan_in),
                                  size=(sizes[h + 1], fan_in)))
    return LayeredNet(sizes, weights, [transfer] * (len(sizes) - 1))


def single_unit_net(n_weights, seed=0):
    """One tanh unit with exactly n_weights parameters (bias included)."""
    return make_test_net(n_weights - 1, [], seed=seed)


@dataclass
class ScalingResult:
    sizes: np.ndarray
    mean_abs_o: np.ndarray
    slope: float
    stderr: float
    r2: float
    rows: list        # per-trial (size, trial, O_emp, ops)


def _regress_loglog(xs, ys):
    lx = np.log(xs)
    ly = np.log(ys)
    a = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(a, ly, rcond=None)
    fit = a @ coef
    ss_res = float(np.sum((ly - fit) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(len(xs) - 2, 1)
    sigma2 = ss_res / dof
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = math.sqrt(sigma2 / sxx) if sxx > 0 else float("nan")
    return float(coef[0]), stderr, r2


def scaling_study(alg_kind, sizes, trials=1000, seed=0, vary="W", k=16,
                  w_fixed=1024, scale=1e-4):
    """Mean |O_emp| against W (or K) with a log-log slope fit."""
    rng = np.random.default_rng(seed)
    means = []
    rows = []
    for size in sizes:
        if vary == "W":
            net = single_unit_net(size, seed=int(rng.integers(2**63)))
            alg = ChannelAlgorithm(alg_kind, k=k, scale=scale)
        elif vary == "K":
            net = single_unit_net(w_fixed, seed=int(rng.integers(2**63)))
            alg = ChannelAlgorithm(alg_kind, k=int(size), scale=scale)
        else:
            raise ValueError(f"unknown vary {vary!r}")
        n_in = net.layer_sizes[0]
        x = rng.normal(size=n_in)
        tgt = np.array([0.5])
        vals = []
        for t in range(trials):
            rep = run(alg, net, x, tgt, seed=int(rng.integers(2**63)))
            vals.append(abs(rep.O_emp))
            rows.append((size, t, rep.O_emp, rep.ops))
        means.append(float(np.mean(vals)))
    slope, stderr, r2 = _regress_loglog(np.asarray(sizes, dtype=float),
                                        np.asarray(means))
    return ScalingResult(sizes=np.asarray(sizes), mean_abs_o=np.asarray(means),
                         slope=slope, stderr=stderr, r2=r2, rows=rows)


def sqrt_log_fit(ks, means):
    """Least-squares fit of means against sqrt(log K); returns (a, b, R^2)
    for means ~ a + b*sqrt(log K)."""
    x = np.sqrt(np.log(np.asarray(ks, dtype=float)))
    a_mat = np.vstack([np.ones_like(x), x]).T
    coef, _, _, _ = np.linalg.lstsq(a_mat, np.asarray(means), rcond=None)
    fit = a_mat @ coef
    ss_res = float(np.sum((means - fit) ** 2))
    ss_tot = float(np.sum((means - np.mean(means)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def unfold(recurrent_weights, length, transfer=None):
    """Unfold a recurrent weight matrix (zero diagonal) over `length` time
    steps into a layered net whose layer matrices share one weight set.

    Shared groups tie the (i, j) entry of every copy; biases are zero and
    untied.  Backpropagation through the unfolded net summed over groups
    is backpropagation through time.
    """
    from .netsim import TANH
    transfer = transfer or TANH
    r = np.asarray(recurrent_weights, dtype=np.float64)
    n = r.shape[0]
    if r.shape != (n, n):
        raise ValueError("recurrent weights must be square")
    if np.any(np.diag(r) != 0.0):
        raise ValueError("no self-connections: diagonal must be zero")
    if length < 1:
        raise ValueError("need at least one time step")
    weights = []
    for _ in range(length):
        w = np.zeros((n, n + 1))
        w[:, 1:] = r
        weights.append(w)
    groups = []
    for i in range(n):
        for j in range(n):
            if i != j:
                groups.append([(h, i, j + 1) for h in range(length)])
    return LayeredNet([n] * (length + 1), weights, [transfer] * length,
                      shared_groups=groups)
