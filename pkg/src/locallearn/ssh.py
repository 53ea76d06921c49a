"""Learnability theory for the clamped (supervised simple Hebb) rule.

A supervised set with +-1 targets canonicalizes to all-positive targets via
I^c(t) = T(t) I(t) (with a +1 bias component prepended first when a bias is
used).  Training then moves the weights along the canonical mean, so
learnability reduces to sign conditions on the canonical cosine matrix:
sufficient when the vectors share an orthant or are mutually orthogonal,
and exactly equivalent to strictly positive cosine row sums when all
vectors have equal length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import TrainingSet

DEGENERATE_TOL = 1e-9


class InconsistentSetError(ValueError):
    pass


@dataclass
class CanonicalSet:
    """Vectors with all targets +1 by construction."""

    vectors: np.ndarray
    with_bias: bool

    @property
    def m(self):
        return self.vectors.shape[0]


@dataclass
class CosineFlags:
    consistent: bool
    common_orthant: bool
    mutually_orthogonal: bool
    equal_lengths: bool
    all_row_sums_positive: bool


@dataclass
class CosineReport:
    cos_matrix: np.ndarray
    row_sums: np.ndarray
    flags: CosineFlags
    degenerate_rows: np.ndarray  # row sums within +-DEGENERATE_TOL of zero


def canonicalize(data, with_bias=False):
    """Build the canonical set; rejects zero vectors and, in no-bias mode,
    inconsistent sets (an input appearing with both orientations and
    conflicting targets shows up as an antipodal canonical pair)."""
    x = np.asarray(data.inputs, dtype=np.float64)
    t = np.asarray(data.targets, dtype=np.float64).reshape(-1)
    if x.shape[0] != t.shape[0]:
        raise ValueError("inputs and targets disagree")
    if not np.all(np.abs(t) == 1.0):
        raise ValueError("targets must be +-1")
    if np.any(np.all(x == 0.0, axis=1)):
        raise ValueError("zero input vectors are not allowed")
    if with_bias:
        x = np.hstack([np.ones((x.shape[0], 1)), x])
    vecs = t[:, None] * x
    if not with_bias:
        for u in range(len(vecs)):
            for v in range(u + 1, len(vecs)):
                if np.array_equal(vecs[u], -vecs[v]):
                    raise InconsistentSetError("not consistent")
    return CanonicalSet(vectors=vecs, with_bias=with_bias)


def criteria(cset):
    """Evaluate all cosine-matrix conditions of the learnability theorem."""
    v = cset.vectors
    norms = np.linalg.norm(v, axis=1)
    cos = (v @ v.T) / np.outer(norms, norms)
    np.fill_diagonal(cos, 1.0)
    row_sums = cos.sum(axis=1)
    consistent = True
    for u in range(len(v)):
        for w in range(u + 1, len(v)):
            if np.array_equal(v[u], -v[w]):
                consistent = False
    off = cos[~np.eye(len(v), dtype=bool)] if len(v) > 1 else np.array([])
    flags = CosineFlags(
        consistent=consistent,
        common_orthant=bool(np.all(off >= -DEGENERATE_TOL)) if off.size else True,
        mutually_orthogonal=bool(np.all(np.abs(off) <= DEGENERATE_TOL))
        if off.size else True,
        equal_lengths=bool(np.all(np.abs(norms - norms[0])
                                  <= 1e-9 * max(1.0, norms[0]))),
        all_row_sums_positive=bool(np.all(row_sums > DEGENERATE_TOL)),
    )
    degenerate = np.abs(row_sums) <= DEGENERATE_TOL
    return CosineReport(cos_matrix=cos, row_sums=row_sums, flags=flags,
                        degenerate_rows=degenerate)


def train_clamped_hebb(data, with_bias=False, w0=None, eta=0.1, epochs=100):
    """Epoch-mode clamped Hebb: each epoch adds exactly eta * mu^c."""
    cset = canonicalize(data, with_bias)
    mu_c = cset.vectors.mean(axis=0)
    w = np.zeros(cset.vectors.shape[1]) if w0 is None \
        else np.array(w0, dtype=np.float64)
    history = [w.copy()]
    for _ in range(epochs):
        w = w + eta * mu_c
        history.append(w.copy())
    return w, np.array(history)


def accuracy_trajectory(data, with_bias=False, w0=None, eta=0.1, epochs=100):
    """Per-epoch training accuracy (fraction of examples classified with a
    strictly positive canonical margin) under clamped-Hebb training."""
    cset = canonicalize(data, with_bias)
    _, history = train_clamped_hebb(data, with_bias, w0=w0, eta=eta,
                                    epochs=epochs)
    out = []
    for w in history:
        margins = cset.vectors @ w
        out.append(float(np.mean(margins > 0.0)))
    return np.array(out)


def separates(w, cset):
    """Strict separation of the canonical set: w . I^c(u) > 0 for every u.

    Margins are compared against a scale-relative tolerance: an exactly
    zero margin evaluated in floating point leaves residue around 1e-16
    of the operand scale, and such threshold ties are ambiguous rather
    than separated.
    """
    margins = cset.vectors @ w
    scale = np.linalg.norm(w) * np.linalg.norm(cset.vectors, axis=1)
    tol = DEGENERATE_TOL * np.maximum(scale, 1.0)
    ok = bool(np.all(margins > tol))
    ambiguous = bool(np.any(np.abs(margins) <= tol))
    return ok, margins, ambiguous


@dataclass
class VerifyResult:
    predicted: bool | None     # None = no theorem branch applies
    empirical: bool
    report: CosineReport
    ambiguous: bool            # empirical margins touching zero exactly


def predict_and_verify(data, with_bias=False, epochs=100, eta=0.1, seed=0,
                       w0_mode="zero"):
    """Theorem verdict vs. actual clamped-Hebb training.

    predicted is True under a sufficient condition (common orthant,
    mutual orthogonality, or positive row sums in the equal-length case),
    False on the equal-length iff branch with a non-positive row sum, and
    None when no branch applies.  Verification trains from w0 = 0
    (w0_mode='zero'), which removes the initial-condition transient, or
    from a random init (w0_mode='random') as a stress mode.
    """
    cset = canonicalize(data, with_bias)
    report = criteria(cset)
    f = report.flags
    if f.equal_lengths:
        predicted = f.all_row_sums_positive
    elif f.common_orthant or f.mutually_orthogonal:
        predicted = True
    else:
        predicted = None
    if w0_mode == "zero":
        w0 = None
    elif w0_mode == "random":
        rng = np.random.default_rng(seed)
        w0 = rng.normal(0.0, 0.1, size=cset.vectors.shape[1])
    else:
        raise ValueError(f"unknown w0_mode {w0_mode!r}")
    w, _ = train_clamped_hebb(data, with_bias, w0=w0, eta=eta, epochs=epochs)
    ok, _margins, ambiguous = separates(w, cset)
    return VerifyResult(predicted=predicted, empirical=ok, report=report,
                        ambiguous=ambiguous)
