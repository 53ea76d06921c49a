"""Polynomial local learning rules.

A rule is a sum of terms in the local variables available at a synapse:
the target T, a postsynaptic factor (the output O, the clamped target T,
or the error T-O), the presynaptic activity I_j, and the weight w_j.
Rules are classified by their total degree n and by their effective
weight degree d, which counts every output factor as one hidden weight
occurrence (the output depends on the weight, linearly to first order)
while clamped-target factors count for nothing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

MAX_DEGREE_DEFAULT = 5

OUTPUT = "output"
CLAMPED = "clamped"
ERROR = "error"
POST_MODES = (OUTPUT, CLAMPED, ERROR)

RANGE_01 = "[0,1]"
RANGE_11 = "[-1,1]"
RANGE_CONVENTIONS = (RANGE_01, RANGE_11)


class DegenerateRuleError(ValueError):
    """Raised when an operation needs at least one surviving term."""


class MissingTargetError(ValueError):
    """Raised when a supervised rule is evaluated without a target."""


@dataclass(frozen=True)
class RuleTerm:
    """One product term coeff * T^nT * P^nPost * I^nPre * w^nW.

    ``post_mode`` selects the postsynaptic factor P: the unit output,
    the clamped target, or the error (T - O).
    """

    coefficient: float
    exp_target: int = 0
    exp_post: int = 0
    exp_pre: int = 0
    exp_weight: int = 0
    post_mode: str = OUTPUT

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise ValueError("term coefficient must be finite")
        for e in (self.exp_target, self.exp_post, self.exp_pre, self.exp_weight):
            if e < 0 or e != int(e):
                raise ValueError("exponents must be non-negative integers")
        if self.post_mode not in POST_MODES:
            raise ValueError(f"unknown post_mode {self.post_mode!r}")

    @property
    def degree(self):
        return self.exp_target + self.exp_post + self.exp_pre + self.exp_weight

    def expand(self):
        """Expand into plain monomials (coeff, nT, nO, nPre, nW).

        Clamped post factors fold into the target exponent; error factors
        expand binomially, so (T-O)^p becomes sum_k C(p,k) T^k (-O)^(p-k).
        """
        c = self.coefficient
        if self.exp_post == 0 or self.post_mode == OUTPUT:
            return [(c, self.exp_target, self.exp_post, self.exp_pre, self.exp_weight)]
        if self.post_mode == CLAMPED:
            return [(c, self.exp_target + self.exp_post, 0, self.exp_pre, self.exp_weight)]
        p = self.exp_post
        out = []
        for k in range(p + 1):
            coeff = c * math.comb(p, k) * (-1.0) ** (p - k)
            out.append((coeff, self.exp_target + k, p - k, self.exp_pre, self.exp_weight))
        return out


def _merge_monomials(monomials):
    acc = {}
    for c, nt, no, npre, nw in monomials:
        key = (nt, no, npre, nw)
        acc[key] = acc.get(key, 0.0) + c
    merged = [(c, *key) for key, c in acc.items() if c != 0.0]
    merged.sort(key=lambda m: m[1:])
    return tuple(merged)


@dataclass
class LearningRule:
    """A named sum of RuleTerms with a range convention.

    Equality and hashing compare the canonical merged monomials only, so
    two rules that denote the same polynomial compare equal regardless of
    name or how the terms were authored.
    """

    terms: tuple
    name: str = ""
    range_convention: str = RANGE_11
    max_degree: int = MAX_DEGREE_DEFAULT
    monomials: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.terms = tuple(self.terms)
        if self.range_convention not in RANGE_CONVENTIONS:
            raise ValueError(f"unknown range convention {self.range_convention!r}")
        flat = []
        for t in self.terms:
            flat.extend(t.expand())
        self.monomials = _merge_monomials(flat)
        for c, nt, no, npre, nw in self.monomials:
            if nt + no + npre + nw > self.max_degree:
                raise ValueError(
                    f"rule {self.name!r} exceeds max degree {self.max_degree}")

    def __eq__(self, other):
        if not isinstance(other, LearningRule):
            return NotImplemented
        return self.monomials == other.monomials

    def __hash__(self):
        return hash(self.monomials)

    @property
    def is_supervised(self):
        return any(nt > 0 for _, nt, _, _, _ in self.monomials) or any(
            t.exp_post > 0 and t.post_mode != OUTPUT for t in self.terms)

    def to_json(self):
        return json.dumps({
            "name": self.name,
            "range": self.range_convention,
            "terms": [{"coeff": t.coefficient, "nT": t.exp_target,
                       "nPost": t.exp_post, "nPre": t.exp_pre,
                       "nW": t.exp_weight, "postMode": t.post_mode}
                      for t in self.terms],
        })

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        terms = tuple(RuleTerm(coefficient=float(d["coeff"]),
                               exp_target=int(d.get("nT", 0)),
                               exp_post=int(d.get("nPost", 0)),
                               exp_pre=int(d.get("nPre", 0)),
                               exp_weight=int(d.get("nW", 0)),
                               post_mode=d.get("postMode", OUTPUT))
                      for d in doc["terms"])
        return cls(terms=terms, name=doc.get("name", ""),
                   range_convention=doc.get("range", RANGE_11))


def classify_degrees(rule):
    """Return (n, d): total degree and effective weight degree."""
    if not rule.monomials:
        raise DegenerateRuleError("degenerate rule")
    n = max(nt + no + npre + nw for _, nt, no, npre, nw in rule.monomials)
    d = max(no + nw for _, nt, no, npre, nw in rule.monomials)
    return n, d


def evaluate_update(rule, o_post, o_pre, w=0.0, target=None, eta=1.0):
    """Evaluate eta * F(T, O, I, w) for one synapse."""
    if rule.is_supervised and target is None:
        raise MissingTargetError("rule has supervised terms but no target given")
    total = 0.0
    for t in rule.terms:
        if t.post_mode == OUTPUT:
            p = o_post
        elif t.post_mode == CLAMPED:
            p = target
        else:
            p = target - o_post
        val = t.coefficient
        if t.exp_target:
            val *= target ** t.exp_target
        if t.exp_post:
            val *= p ** t.exp_post
        if t.exp_pre:
            val *= o_pre ** t.exp_pre
        if t.exp_weight:
            val *= w ** t.exp_weight
        total += val
    return eta * total


def pack_monomials(rule, supervised_allowed=True):
    """Pack canonical monomials into flat arrays for the training kernels."""
    if not rule.monomials:
        raise DegenerateRuleError("degenerate rule")
    if not supervised_allowed and rule.is_supervised:
        raise MissingTargetError("supervised rule where an unsupervised one is required")
    coeffs = np.array([m[0] for m in rule.monomials], dtype=np.float64)
    e_t = np.array([m[1] for m in rule.monomials], dtype=np.int64)
    e_o = np.array([m[2] for m in rule.monomials], dtype=np.int64)
    e_pre = np.array([m[3] for m in rule.monomials], dtype=np.int64)
    e_w = np.array([m[4] for m in rule.monomials], dtype=np.int64)
    return coeffs, e_t, e_o, e_pre, e_w


# ---------------------------------------------------------------------------
# Quadratic range transform between the [0,1] and [-1,1] conventions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticCoefficients:
    """Coefficients of the quadratic family a*OiOj + b*Oi + c*Oj + d."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for v in (self.alpha, self.beta, self.gamma, self.delta):
            if not math.isfinite(v):
                raise ValueError("coefficients must be finite")

    def as_array(self):
        return np.array([self.alpha, self.beta, self.gamma, self.delta])


# matrix of the [0,1] -> [-1,1] coefficient map
RANGE_TRANSFORM_MATRIX = np.array([
    [4.0, 0.0, 0.0, 0.0],
    [-2.0, 2.0, 0.0, 0.0],
    [-2.0, 0.0, 2.0, 0.0],
    [1.0, -1.0, -1.0, 1.0],
])


def range_transform(coeffs, from_range):
    """Map quadratic coefficients between range conventions.

    from_range=[0,1] applies the forward homogeneous system; [-1,1]
    applies its exact inverse, so a round trip is the identity.
    """
    if from_range == RANGE_01:
        a, b, g, d = coeffs.alpha, coeffs.beta, coeffs.gamma, coeffs.delta
        return QuadraticCoefficients(
            alpha=4.0 * a,
            beta=2.0 * b - 2.0 * a,
            gamma=2.0 * g - 2.0 * a,
            delta=d + a - b - g,
        )
    if from_range == RANGE_11:
        a, b, g, d = coeffs.alpha, coeffs.beta, coeffs.gamma, coeffs.delta
        alpha = a / 4.0
        beta = b / 2.0 + a / 4.0
        gamma = g / 2.0 + a / 4.0
        delta = d + a / 4.0 + b / 2.0 + g / 2.0
        return QuadraticCoefficients(alpha, beta, gamma, delta)
    raise ValueError(f"unknown range convention {from_range!r}")


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def _t(c, nT=0, nO=0, nPre=0, nW=0, mode=OUTPUT):
    return RuleTerm(coefficient=float(c), exp_target=nT, exp_post=nO,
                    exp_pre=nPre, exp_weight=nW, post_mode=mode)


def _rule(name, *terms):
    return LearningRule(terms=terms, name=name)


def simple_hebb():
    return _rule("simple_hebb", _t(1, nO=1, nPre=1))


def anti_hebb():
    return _rule("anti_hebb", _t(-1, nO=1, nPre=1))


def clamped_hebb():
    return _rule("clamped_hebb", _t(1, nO=1, nPre=1, mode=CLAMPED))


def oja():
    return _rule("oja", _t(1, nO=1, nPre=1), _t(-1, nO=2, nW=1))


def perceptron():
    return _rule("perceptron", _t(1, nO=1, nPre=1, mode=ERROR))


def gradient():
    return _rule("gradient", _t(1, nO=1, nPre=1, mode=ERROR))


def gradient_tanh():
    # same rule over the [-1,1] range; the 2 comes from the tanh entropy loss
    return LearningRule(terms=(_t(2, nO=1, nPre=1, mode=ERROR),),
                        name="gradient_tanh", range_convention=RANGE_11)


def delta():
    # (T-O)(1-O^2)I for tanh units, written out as monomials
    return _rule("delta",
                 _t(1, nT=1, nPre=1), _t(-1, nO=1, nPre=1),
                 _t(-1, nT=1, nO=2, nPre=1), _t(1, nO=3, nPre=1))


def new_rule():
    return _rule("new_rule", _t(1, nO=1, nPre=1), _t(-1, nO=1, nPre=1, nW=2))


def new_rule_clamped():
    return _rule("new_rule_clamped",
                 _t(1, nO=1, nPre=1, mode=CLAMPED),
                 _t(-1, nO=1, nPre=1, nW=2, mode=CLAMPED))


def new_rule_gradient():
    return _rule("new_rule_gradient",
                 _t(1, nO=1, nPre=1, mode=ERROR),
                 _t(-1, nO=1, nPre=1, nW=2, mode=ERROR))


def fixed_decay(c=1.0):
    return _rule("fixed_decay", _t(1, nO=1, nPre=1), _t(-c, nW=1))


def fixed_decay_clamped(c=1.0):
    return _rule("fixed_decay_clamped",
                 _t(1, nO=1, nPre=1, mode=CLAMPED), _t(-c, nW=1))


def fixed_decay_gradient(c=1.0):
    return _rule("fixed_decay_gradient",
                 _t(1, nO=1, nPre=1, mode=ERROR), _t(-c, nW=1))


def presynaptic_decay():
    return _rule("presynaptic_decay", _t(1, nO=1, nPre=1), _t(-1, nPre=2, nW=1))


def presynaptic_decay_clamped():
    return _rule("presynaptic_decay_clamped",
                 _t(1, nO=1, nPre=1, mode=CLAMPED), _t(-1, nPre=2, nW=1))


def presynaptic_decay_gradient():
    return _rule("presynaptic_decay_gradient",
                 _t(1, nO=1, nPre=1, mode=ERROR), _t(-1, nPre=2, nW=1))


def oja_clamped():
    return _rule("oja_clamped", _t(1, nO=1, nPre=1, mode=CLAMPED), _t(-1, nO=2, nW=1))


def oja_clamped_target():
    return _rule("oja_clamped_target",
                 _t(1, nO=1, nPre=1, mode=CLAMPED), _t(-1, nO=2, nW=1, mode=CLAMPED))


def oja_gradient():
    return _rule("oja_gradient", _t(1, nO=1, nPre=1, mode=ERROR), _t(-1, nO=2, nW=1))


def oja_gradient_error():
    return _rule("oja_gradient_error",
                 _t(1, nO=1, nPre=1, mode=ERROR), _t(-1, nO=2, nW=1, mode=ERROR))


def hebb_squared_decay():
    return _rule("hebb_squared_decay", _t(1, nO=1, nPre=1), _t(-1, nO=2, nPre=2, nW=1))


def hebb_squared_decay_clamped():
    return _rule("hebb_squared_decay_clamped",
                 _t(1, nO=1, nPre=1, mode=CLAMPED), _t(-1, nO=2, nPre=2, nW=1))


def hebb_squared_decay_clamped_target():
    return _rule("hebb_squared_decay_clamped_target",
                 _t(1, nO=1, nPre=1, mode=CLAMPED),
                 _t(-1, nO=2, nPre=2, nW=1, mode=CLAMPED))


def hebb_squared_decay_gradient():
    return _rule("hebb_squared_decay_gradient",
                 _t(1, nO=1, nPre=1, mode=ERROR), _t(-1, nO=2, nPre=2, nW=1))


def hebb_squared_decay_gradient_error():
    return _rule("hebb_squared_decay_gradient_error",
                 _t(1, nO=1, nPre=1, mode=ERROR),
                 _t(-1, nO=2, nPre=2, nW=1, mode=ERROR))


def bounded_hebb(c=1.0):
    return _rule("bounded_hebb", _t(c, nO=1, nPre=1), _t(-1, nO=1, nPre=1, nW=2))


def bounded_clamped(c=1.0):
    return _rule("bounded_clamped",
                 _t(c, nO=1, nPre=1, mode=CLAMPED),
                 _t(-1, nO=1, nPre=1, nW=2, mode=CLAMPED))


def bounded_gradient(c=1.0):
    return _rule("bounded_gradient",
                 _t(c, nO=1, nPre=1, mode=ERROR),
                 _t(-1, nO=1, nPre=1, nW=2, mode=ERROR))


def input_saturation():
    # (1 - w^2) I: drives each weight toward sign(mean input); its epoch
    # dynamics follow a Riccati differential equation
    return _rule("input_saturation", _t(1, nPre=1), _t(-1, nPre=1, nW=2))


_CATALOG_BUILDERS = (
    simple_hebb, anti_hebb, clamped_hebb, oja, perceptron, gradient,
    gradient_tanh, delta,
    new_rule, new_rule_clamped, new_rule_gradient,
    fixed_decay, fixed_decay_clamped, fixed_decay_gradient,
    presynaptic_decay, presynaptic_decay_clamped, presynaptic_decay_gradient,
    oja_clamped, oja_clamped_target, oja_gradient, oja_gradient_error,
    hebb_squared_decay, hebb_squared_decay_clamped,
    hebb_squared_decay_clamped_target, hebb_squared_decay_gradient,
    hebb_squared_decay_gradient_error,
    bounded_hebb, bounded_clamped, bounded_gradient,
    input_saturation,
)


def catalog():
    """All named rules with their default parameters, keyed by name."""
    rules = {}
    for build in _CATALOG_BUILDERS:
        r = build()
        rules[r.name] = r
    return rules


_BUILDER_BY_NAME = {b().name: b for b in _CATALOG_BUILDERS}


def get_rule(name, **params):
    """Look up a catalog rule by name; params go to parameterized builders."""
    try:
        build = _BUILDER_BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown rule {name!r}") from None
    return build(**params) if params else build()
