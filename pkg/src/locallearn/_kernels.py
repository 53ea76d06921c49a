"""Hot inner loops for online training.

Every kernel here is written once as plain Python over numpy arrays and
compiled with numba's ``@njit`` when available.  Setting the environment
variable ``LOCALLEARN_NO_NUMBA=1`` (before import) selects the uncompiled
fallback, which executes the identical code path and therefore produces
bit-identical results.  All randomness (initial weights, presentation
orders) is generated by callers with numpy Generators and passed in as
arrays, so the two paths never diverge.

Rule terms arrive pre-expanded into plain monomials
``coeff * T^et * O^eo * I_j^ep * w_j^ew`` (see ``rules.pack_monomials``).
"""

import math
import os

import numpy as np

_NO_NUMBA_ENV = "LOCALLEARN_NO_NUMBA"


def _numba_disabled():
    return os.environ.get(_NO_NUMBA_ENV, "").strip().lower() in ("1", "true", "yes")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - mirror environments without numba
    numba = None
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and not _numba_disabled()


def _maybe_jit(func):
    if USING_NUMBA:
        return numba.njit(cache=True)(func)
    return func


# transfer codes shared with netsim.TransferFunction
LINEAR, LOGISTIC01, TANH11, THRESHOLD01, THRESHOLD11 = 0, 1, 2, 3, 4


def _transfer_scalar(code, slope, s):
    if code == 0:
        return s
    if code == 1:
        return 1.0 / (1.0 + math.exp(-slope * s))
    if code == 2:
        return math.tanh(slope * s)
    if code == 3:
        return 1.0 if s >= 0.0 else 0.0
    return 1.0 if s >= 0.0 else -1.0


def _unit_online_train(inputs, targets, has_targets, w, etas, orders,
                       tcode, slope, coeffs, e_t, e_o, e_pre, e_w, snapshots):
    """On-line training of a single unit; one weight snapshot per epoch.

    ``w`` is updated in place; ``snapshots`` has shape (epochs+1, N) with
    row 0 holding the initial weights.
    """
    n_epochs = etas.shape[0]
    m, n = inputs.shape
    k_terms = coeffs.shape[0]
    dw = np.zeros(n)
    for j in range(n):
        snapshots[0, j] = w[j]
    for k in range(n_epochs):
        eta = etas[k]
        for idx in range(m):
            t = orders[k, idx]
            s = 0.0
            for j in range(n):
                s += w[j] * inputs[t, j]
            o = _transfer_scalar(tcode, slope, s)
            tv = targets[t] if has_targets else 0.0
            for j in range(n):
                dw[j] = 0.0
            for q in range(k_terms):
                f = coeffs[q]
                for _ in range(e_t[q]):
                    f *= tv
                for _ in range(e_o[q]):
                    f *= o
                if f == 0.0:
                    continue
                for j in range(n):
                    g = f
                    for _ in range(e_pre[q]):
                        g *= inputs[t, j]
                    for _ in range(e_w[q]):
                        g *= w[j]
                    dw[j] += g
            for j in range(n):
                w[j] += eta * dw[j]
        for j in range(n):
            snapshots[k + 1, j] = w[j]


def _layer_online_train(inputs, weights, etas, orders, tcode, slope,
                        coeffs, e_o, e_pre, e_w):
    """On-line unsupervised training of a full layer of independent units.

    ``weights`` has shape (units, N) and is updated in place.  Every unit
    sees the same presentation order.
    """
    n_epochs = etas.shape[0]
    m, n = inputs.shape
    units = weights.shape[0]
    k_terms = coeffs.shape[0]
    dw = np.zeros(n)
    for k in range(n_epochs):
        eta = etas[k]
        for idx in range(m):
            t = orders[k, idx]
            for u in range(units):
                s = 0.0
                for j in range(n):
                    s += weights[u, j] * inputs[t, j]
                o = _transfer_scalar(tcode, slope, s)
                for j in range(n):
                    dw[j] = 0.0
                for q in range(k_terms):
                    f = coeffs[q]
                    for _ in range(e_o[q]):
                        f *= o
                    if f == 0.0:
                        continue
                    for j in range(n):
                        g = f
                        for _ in range(e_pre[q]):
                            g *= inputs[t, j]
                        for _ in range(e_w[q]):
                            g *= weights[u, j]
                        dw[j] += g
                for j in range(n):
                    weights[u, j] += eta * dw[j]


def _boolean_shallow_trials(xb, t, w_inits, orders, etas,
                            coeffs, e_t, e_o, e_pre, e_w):
    """Restart loop for one threshold unit on a truth table.

    Returns the index of the first restart whose trained unit reproduces
    the table with strictly nonzero margins, or -1.
    """
    b_total = w_inits.shape[0]
    m, n = xb.shape
    snaps = np.zeros((etas.shape[0] + 1, n))
    w = np.zeros(n)
    for b in range(b_total):
        for j in range(n):
            w[j] = w_inits[b, j]
        unit_online_train(xb, t, True, w, etas, orders[b], THRESHOLD11, 1.0,
                          coeffs, e_t, e_o, e_pre, e_w, snaps)
        good = True
        for mm in range(m):
            s = 0.0
            for j in range(n):
                s += w[j] * xb[mm, j]
            if t[mm] * s <= 0.0:
                good = False
                break
        if good:
            return b
    return -1


def _boolean_deep_trials(xb, t, h_inits, t_inits, h_orders, t_orders,
                         etas_hidden, etas_top,
                         u_coeffs, u_eo, u_epre, u_ew,
                         s_coeffs, s_et, s_eo, s_epre, s_ew):
    """Restart loop for the two-layer census: unsupervised hidden layer of
    threshold units, then a supervised top unit on the +-1 hidden codes.

    Restarts with an exact hidden tie (pre-activation 0) never count.
    Returns the first successful restart index or -1.
    """
    b_total = h_inits.shape[0]
    m, n = xb.shape
    width = h_inits.shape[1]
    snaps = np.zeros((etas_top.shape[0] + 1, width + 1))
    wtop = np.zeros(width + 1)
    hb = np.ones((m, width + 1))
    for b in range(b_total):
        w_hidden = h_inits[b].copy()
        layer_online_train(xb, w_hidden, etas_hidden, h_orders[b], THRESHOLD11,
                           1.0, u_coeffs, u_eo, u_epre, u_ew)
        ok = True
        for mm in range(m):
            for u in range(width):
                s = 0.0
                for j in range(n):
                    s += w_hidden[u, j] * xb[mm, j]
                if s == 0.0:
                    ok = False
                hb[mm, u + 1] = 1.0 if s >= 0.0 else -1.0
        if not ok:
            continue
        for j in range(width + 1):
            wtop[j] = t_inits[b, j]
        unit_online_train(hb, t, True, wtop, etas_top, t_orders[b], THRESHOLD11,
                          1.0, s_coeffs, s_et, s_eo, s_epre, s_ew, snaps)
        good = True
        for mm in range(m):
            s = 0.0
            for j in range(width + 1):
                s += wtop[j] * hb[mm, j]
            if t[mm] * s <= 0.0:
                good = False
                break
        if good:
            return b
    return -1


_transfer_scalar = _maybe_jit(_transfer_scalar)
unit_online_train = _maybe_jit(_unit_online_train)
layer_online_train = _maybe_jit(_layer_online_train)
boolean_shallow_trials = _maybe_jit(_boolean_shallow_trials)
boolean_deep_trials = _maybe_jit(_boolean_deep_trials)
