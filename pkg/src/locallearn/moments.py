"""Closed-form expectation dynamics for polynomial rules on a linear unit.

Given first and second data moments, every supported monomial's expected
per-weight update has an exact vector form; rules that are linear in the
weights (effective degree d <= 1) yield the affine epoch recurrence
w(k+1) = A w(k) + b, solvable in closed form.  The weight-saturating rule
(1 - w^2) I is the solvable d = 2 special case (a Riccati equation).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .rules import MissingTargetError, classify_degrees

SUPPORTED_DATA_DEGREE = 2


class UnsupportedTermError(ValueError):
    """Raised for terms whose expectation needs third or higher moments."""


@dataclass
class DataMoments:
    """First and second order statistics of a training set.

    sigma_ii and sigma_it are raw second moments E(I I') and E(I T), not
    centered covariances.
    """

    mu: np.ndarray
    sigma_ii: np.ndarray
    sigma_it: np.ndarray | None = None
    mu_t: float | None = None
    m2_t: float | None = None
    n_samples: int = 0

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma_ii = np.asarray(self.sigma_ii, dtype=np.float64)
        n = self.mu.shape[0]
        if self.sigma_ii.shape != (n, n):
            raise ValueError("sigma_ii must be N x N")
        if not np.allclose(self.sigma_ii, self.sigma_ii.T, atol=1e-9):
            raise ValueError("sigma_ii must be symmetric")
        cov = self.sigma_ii - np.outer(self.mu, self.mu)
        eigmin = float(np.linalg.eigvalsh(cov).min())
        if eigmin < -1e-8 * max(1.0, float(np.abs(cov).max())):
            raise ValueError("covariance part of sigma_ii is not PSD")
        if self.sigma_it is not None:
            self.sigma_it = np.asarray(self.sigma_it, dtype=np.float64)
            if self.sigma_it.shape != (n,):
                raise ValueError("sigma_it must have length N")
            if self.m2_t is not None and self.mu_t is not None \
                    and self.m2_t < self.mu_t ** 2 - 1e-12:
                raise ValueError("E(T^2) < E(T)^2")

    @property
    def n_features(self):
        return self.mu.shape[0]

    @property
    def supervised(self):
        return self.sigma_it is not None

    def to_json(self):
        doc = {"mu": self.mu.tolist(), "sigma_ii": self.sigma_ii.tolist(),
               "n_samples": self.n_samples}
        if self.supervised:
            doc.update(sigma_it=self.sigma_it.tolist(), mu_t=self.mu_t,
                       m2_t=self.m2_t)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(mu=np.array(doc["mu"]), sigma_ii=np.array(doc["sigma_ii"]),
                   sigma_it=(np.array(doc["sigma_it"])
                             if "sigma_it" in doc else None),
                   mu_t=doc.get("mu_t"), m2_t=doc.get("m2_t"),
                   n_samples=doc.get("n_samples", 0))


def compute_moments(dataset):
    """Exact sample moments (divide by M)."""
    x = np.asarray(dataset.inputs, dtype=np.float64)
    m = x.shape[0]
    if m == 0:
        raise ValueError("empty dataset")
    mu = x.mean(axis=0)
    sigma_ii = x.T @ x / m
    sigma_ii = (sigma_ii + sigma_ii.T) / 2.0
    t = dataset.targets
    if t is None:
        return DataMoments(mu, sigma_ii, n_samples=m)
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 2:
        if t.shape[1] != 1:
            raise ValueError("moments support a single target component")
        t = t[:, 0]
    return DataMoments(mu, sigma_ii, sigma_it=x.T @ t / m,
                       mu_t=float(t.mean()), m2_t=float((t * t).mean()),
                       n_samples=m)


def _data_vector(moments, a, e, w):
    """E(T^a O^b I_i^e) as a vector over i for b = 0 terms, and the three
    b = 1 forms; a is the T power, e the I_i power."""
    n = moments.n_features
    u = np.ones(n)
    if a > 0 and not moments.supervised:
        raise MissingTargetError("supervised term but moments have no targets")
    if (a, e) == (0, 0):
        return u
    if (a, e) == (1, 0):
        return moments.mu_t * u
    if (a, e) == (2, 0):
        return moments.m2_t * u
    if (a, e) == (0, 1):
        return moments.mu.copy()
    if (a, e) == (0, 2):
        return np.diag(moments.sigma_ii).copy()
    if (a, e) == (1, 1):
        return moments.sigma_it.copy()
    raise UnsupportedTermError("higher-order moments required")


def _output_vector(moments, a, e, w):
    """E(T^a O I_i^e) for the supported output-bearing monomials."""
    n = moments.n_features
    u = np.ones(n)
    if a > 0 and not moments.supervised:
        raise MissingTargetError("supervised term but moments have no targets")
    if (a, e) == (0, 0):
        return float(moments.mu @ w) * u
    if (a, e) == (0, 1):
        return moments.sigma_ii @ w
    if (a, e) == (1, 0):
        return float(moments.sigma_it @ w) * u
    raise UnsupportedTermError("higher-order moments required")


def _check_supported(monomials):
    for _c, a, b, e, _nw in monomials:
        if a + b + e > SUPPORTED_DATA_DEGREE:
            raise UnsupportedTermError(
                "higher-order moments required for term "
                f"T^{a} O^{b} I^{e}")


def term_expectation(term, moments, w):
    """Expected per-weight update vector of one term, coefficient included."""
    w = np.asarray(w, dtype=np.float64)
    monomials = term.expand()
    _check_supported(monomials)
    out = np.zeros(moments.n_features)
    for c, a, b, e, nw in monomials:
        if b == 0:
            v = _data_vector(moments, a, e, w)
        elif b == 1:
            v = _output_vector(moments, a, e, w)
        elif b == 2 and (a, e) == (0, 0):
            v = float(w @ moments.sigma_ii @ w) * np.ones(moments.n_features)
        else:
            raise UnsupportedTermError("higher-order moments required")
        out += c * (w ** nw) * v
    return out


def rule_expectation(rule, moments, w):
    """Expected per-weight update of a whole rule at weights w."""
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros(moments.n_features)
    for term in rule.terms:
        out += term_expectation(term, moments, w)
    return out


@dataclass
class RecurrenceSpec:
    """Affine epoch recurrence w(k+1) = A w(k) + b starting from w0."""

    A: np.ndarray
    b: np.ndarray
    w0: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.w0 = np.asarray(self.w0, dtype=np.float64)
        n = self.b.shape[0]
        if self.A.shape != (n, n) or self.w0.shape != (n,):
            raise ValueError("recurrence dimensions disagree")


@dataclass(frozen=True)
class NonlinearFlag:
    """Marks a rule whose expected dynamics are not affine in w; routes the
    caller to simulation or, when riccati_form is set, to riccati_solution."""

    n: int
    d: int
    riccati_form: bool = False


def _is_riccati_form(monomials):
    # c * T^a * I (a in {0,1}) paired with -c * T^a * I * w^2
    if len(monomials) != 2:
        return False
    by_key = {(a, b, e, nw): c for c, a, b, e, nw in monomials}
    for a in (0, 1):
        c1 = by_key.get((a, 0, 1, 0))
        c2 = by_key.get((a, 0, 1, 2))
        if c1 is not None and c2 is not None and c1 == -c2:
            return True
    return False


def rule_recurrence(rule, moments, w0=None, eta=1.0):
    """Assemble the affine epoch recurrence for a d <= 1 rule.

    Returns RecurrenceSpec with A = I + eta * (linear part) when d <= 1;
    otherwise a NonlinearFlag.  Terms needing third or higher data moments
    raise UnsupportedTermError.
    """
    _check_supported(rule.monomials)
    n_deg, d = classify_degrees(rule)
    nf = moments.n_features
    if d > 1:
        return NonlinearFlag(n=n_deg, d=d,
                             riccati_form=_is_riccati_form(rule.monomials))
    a_mat = np.zeros((nf, nf))
    b_vec = np.zeros(nf)
    u = np.ones(nf)
    for c, a, b, e, nw in rule.monomials:
        if b == 0 and nw == 0:
            b_vec += c * _data_vector(moments, a, e, None)
        elif b == 0 and nw == 1:
            a_mat += c * np.diag(_data_vector(moments, a, e, None))
        elif b == 1 and nw == 0:
            if (a, e) == (0, 0):
                a_mat += c * np.outer(u, moments.mu)
            elif (a, e) == (0, 1):
                a_mat += c * moments.sigma_ii
            elif (a, e) == (1, 0):
                if not moments.supervised:
                    raise MissingTargetError(
                        "supervised term but moments have no targets")
                a_mat += c * np.outer(u, moments.sigma_it)
            else:  # pragma: no cover - excluded by _check_supported
                raise UnsupportedTermError("higher-order moments required")
        else:  # pragma: no cover - d <= 1 excludes anything else
            raise AssertionError("monomial inconsistent with d <= 1")
    if w0 is None:
        w0 = np.zeros(nf)
    return RecurrenceSpec(A=np.eye(nf) + eta * a_mat, b=eta * b_vec, w0=w0)


def solve_recurrence(spec, k):
    """w(k) = A^k w0 + (I + A + ... + A^(k-1)) b.

    Symmetric A goes through the eigendecomposition with the geometric sum
    xi = (lambda^k - 1)/(lambda - 1), and xi = k at lambda = 1; other A
    iterate directly.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return spec.w0.copy()
    a, b, w0 = spec.A, spec.b, spec.w0
    if np.allclose(a, a.T, atol=1e-12, rtol=0.0):
        lam, c = np.linalg.eigh(a)
        lam_k = lam ** k
        xi = np.where(np.abs(lam - 1.0) > 1e-12,
                      (lam_k - 1.0) / np.where(lam == 1.0, 1.0, lam - 1.0),
                      float(k))
        return c @ (lam_k * (c.T @ w0)) + c @ (xi * (c.T @ b))
    w = w0.copy()
    for _ in range(k):
        w = a @ w + b
    return w


def predicted_unit_trajectory(rule, data_moments, w0, eta, epochs,
                              presentations_per_epoch):
    """Analytic per-epoch weight snapshots for on-line training.

    The affine recurrence is the expectation of one *presentation*, so it
    is applied once per presentation (M times per epoch) with the on-line
    rate; entry k is the prediction after k full epochs.
    """
    spec = rule_recurrence(rule, data_moments, w0=w0, eta=eta)
    if isinstance(spec, NonlinearFlag):
        raise ValueError("rule is not affine in the weights (d > 1)")
    return np.stack([solve_recurrence(spec, k * presentations_per_epoch)
                     for k in range(epochs + 1)])


def riccati_solution(eta, mu, w0, t):
    """Solution of dw/dt = eta*mu*(1 - w^2).

    w(t) = (1 - 2C e^(-2 eta mu t)) / (1 + 2C e^(-2 eta mu t)) with
    C = (1 - w0) / (2 (1 + w0)); w0 = -1 sits on the constant solution -1.
    """
    if w0 == -1.0:
        return -1.0
    c = (1.0 - w0) / (2.0 * (1.0 + w0))
    x = 2.0 * eta * mu * t
    if x >= 0.0:
        e = math.exp(-x)
        return (1.0 - 2.0 * c * e) / (1.0 + 2.0 * c * e)
    e = math.exp(x)
    return (e - 2.0 * c) / (e + 2.0 * c)


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def dropout_mean(moments, w, transfer="logistic"):
    """Mean-output estimate f(w' mu) and its error bound 2E(1-E)|1-2E|.

    The tanh estimate is computed as 2*sigmoid(2S) - 1 so the identity with
    the doubled-argument logistic form holds exactly.
    """
    s = float(np.asarray(w) @ moments.mu)
    if transfer == "logistic":
        est = _sigmoid(s)
        bound = 2.0 * est * (1.0 - est) * abs(1.0 - 2.0 * est)
        return est, bound
    if transfer == "tanh":
        e01 = _sigmoid(2.0 * s)
        est = 2.0 * e01 - 1.0
        bound = 2.0 * (2.0 * e01 * (1.0 - e01) * abs(1.0 - 2.0 * e01))
        return est, bound
    raise ValueError(f"unknown transfer {transfer!r}")


def nonlinear_hebb_estimate(moments, w, transfer="logistic"):
    """Small-weight estimate of E(O I_i) for centered data: f'(0) w_i Var(I_i).

    Diagnostic only; never used to drive training.
    """
    w = np.asarray(w, dtype=np.float64)
    fprime0 = 0.25 if transfer == "logistic" else 1.0
    var = np.diag(moments.sigma_ii) - moments.mu ** 2
    return fprime0 * w * var
