"""Hopfield storage, hypercube energy orientations, and isometry
invariance of symmetric local storage rules.

Storing +-1 memories with integer-coefficient rules gives integer
weights, so every energy comparison below is exact: orientations are
computed in integer arithmetic and ties are kept explicit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

EXHAUSTIVE_CAP = 14


class HopfieldNet:
    """Symmetric weights, zero diagonal."""

    def __init__(self, weights):
        w = np.asarray(weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be square")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("diagonal must be zero")
        self.weights = w

    @property
    def n(self):
        return self.weights.shape[0]


def _check_memories(memories):
    m = np.asarray(memories)
    if m.ndim == 1:
        m = m[None, :]
    if not np.all(np.abs(m) == 1):
        raise ValueError("memories must be +-1 vectors")
    return m.astype(np.int64)


def store(memories):
    """Simple Hebb storage: w_ij = sum_k m_i m_j, zero diagonal."""
    m = _check_memories(memories)
    w = m.T @ m
    np.fill_diagonal(w, 0)
    return HopfieldNet(w)


def store_general(memories, alpha, beta, gamma):
    """Symmetric quadratic storage rule alpha*OiOj + beta*(Oi+Oj) + gamma.

    Integer coefficients keep the weights (and energies) exact integers.
    """
    m = _check_memories(memories)
    k = m.shape[0]
    sums = m.sum(axis=0)
    w = alpha * (m.T @ m) + beta * (sums[:, None] + sums[None, :]) + gamma * k
    if all(float(c).is_integer() for c in (alpha, beta, gamma)):
        w = np.asarray(np.rint(w), dtype=np.int64)
    np.fill_diagonal(w, 0)
    return HopfieldNet(w)


def states_matrix(n):
    """All 2^n states; component j of code c is the sign of bit j (LSB)."""
    codes = np.arange(2 ** n)
    bits = (codes[:, None] >> np.arange(n)[None, :]) & 1
    return (2 * bits - 1).astype(np.int64)


def state_code(state):
    s = np.asarray(state)
    bits = (s > 0).astype(np.int64)
    return int(bits @ (1 << np.arange(len(s))))


def energy(net, state):
    """E = -(1/2) sum_ij w_ij s_i s_j; integer for integer weights."""
    s = np.asarray(state)
    q = s @ net.weights @ s
    if net.weights.dtype.kind in "iu":
        q = int(q)
        return -(q // 2) if q % 2 == 0 else -q / 2
    return float(-q / 2.0)


def all_energies(net):
    """Twice the energy of every state, exactly (integer weights stay int)."""
    s = states_matrix(net.n)
    return -np.einsum("ij,ij->i", s @ net.weights, s)


@dataclass
class HypercubeOrientation:
    """directions[c, j] = sign(E(x_c) - E(x_c xor bit j)): +1 when the edge
    points away from x_c (energy drops), -1 toward it, 0 on a tie."""

    n: int
    directions: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, HypercubeOrientation)
                and self.n == other.n
                and np.array_equal(self.directions, other.directions))

    @property
    def tie_count(self):
        return int((self.directions == 0).sum()) // 2

    def is_all_tie(self):
        return bool(np.all(self.directions == 0))

    def sinks(self):
        """States all of whose incident edges point inward."""
        return np.where(np.all(self.directions <= 0, axis=1)
                        & np.any(self.directions < 0, axis=1))[0]


def orientation(net):
    if net.n > EXHAUSTIVE_CAP:
        raise ValueError(f"orientation capped at n = {EXHAUSTIVE_CAP}")
    e2 = all_energies(net)  # twice-energy, sign-compatible with energy
    idx = np.arange(2 ** net.n)[:, None] ^ (1 << np.arange(net.n))[None, :]
    dirs = np.sign(e2[:, None] - e2[idx]).astype(np.int8)
    return HypercubeOrientation(n=net.n, directions=dirs)


@dataclass(frozen=True)
class Isometry:
    """h(x)_i = sign_flips[i] * x[permutation[i]]; generated by component
    swaps and sign inversions, so Hamming distance is preserved."""

    permutation: tuple
    sign_flips: tuple

    def __post_init__(self):
        n = len(self.permutation)
        if sorted(self.permutation) != list(range(n)):
            raise ValueError("not a permutation")
        if len(self.sign_flips) != n or any(abs(e) != 1 for e in self.sign_flips):
            raise ValueError("sign flips must be +-1")

    @property
    def n(self):
        return len(self.permutation)

    def apply(self, states):
        s = np.asarray(states)
        single = s.ndim == 1
        if single:
            s = s[None, :]
        out = np.asarray(self.sign_flips) * s[:, list(self.permutation)]
        return out[0] if single else out

    def state_code_map(self):
        """codes_h[c] = code of h(x_c), for all states at once."""
        hs = self.apply(states_matrix(self.n))
        bits = (hs > 0).astype(np.int64)
        return bits @ (1 << np.arange(self.n))

    def inverse_permutation(self):
        inv = [0] * self.n
        for i, p in enumerate(self.permutation):
            inv[p] = i
        return inv


def all_isometries(n):
    for perm in itertools.permutations(range(n)):
        for flips in itertools.product((1, -1), repeat=n):
            yield Isometry(permutation=perm, sign_flips=flips)


def sign_flip_isometries(n):
    ident = tuple(range(n))
    for flips in itertools.product((1, -1), repeat=n):
        yield Isometry(permutation=ident, sign_flips=flips)


def random_isometry(n, rng):
    return Isometry(permutation=tuple(rng.permutation(n)),
                    sign_flips=tuple(rng.choice([-1, 1], size=n)))


def transport(orient, h):
    """Push an orientation forward through an isometry.

    Flipping component b of x flips component inv_perm[b] of h(x), so the
    direction stored at (c, b) lands at (code(h(x_c)), inv_perm[b]).
    """
    codes_h = h.state_code_map()
    inv = h.inverse_permutation()
    dirs = np.empty_like(orient.directions)
    dirs[codes_h[:, None], np.asarray(inv)[None, :]] = orient.directions
    return HypercubeOrientation(n=orient.n, directions=dirs)


def commutes(memories, h, coeffs=(1, 0, 0)):
    """Does h(orientation(store(S))) equal orientation(store(h(S)))?

    Tie edges must map to tie edges.  coeffs selects the symmetric storage
    rule alpha*OiOj + beta*(Oi+Oj) + gamma (simple Hebb by default).
    """
    m = _check_memories(memories)
    o_s = orientation(store_general(m, *coeffs))
    o_hs = orientation(store_general(h.apply(m), *coeffs))
    return transport(o_s, h) == o_hs


@dataclass
class UniquenessResult:
    counterexample: tuple | None    # (memories, isometry) or None
    checked: int
    all_tie_sets: int

    @property
    def found(self):
        return self.counterexample is not None


def uniqueness_search(n, rule_coeffs, trials=2000, seed=0):
    """Search memory sets and isometries for a commutation violation of the
    symmetric rule alpha*OiOj + beta*(Oi+Oj) + gamma.

    Sweeps single-memory sets against sign-flip isometries exhaustively,
    then single memories against all isometries (n <= 4), then random
    multi-memory sets with random isometries up to the trial budget.
    Degenerate all-tie orientations are tallied separately.
    """
    if n > 6:
        raise ValueError("uniqueness search capped at n = 6")
    rng = np.random.default_rng(seed)
    states = states_matrix(n)
    checked = 0
    all_tie = 0

    def try_pair(mem, iso):
        nonlocal checked, all_tie
        checked += 1
        net = store_general(mem, *rule_coeffs)
        o = orientation(net)
        if o.is_all_tie():
            all_tie += 1
        if not commutes(mem, iso, coeffs=rule_coeffs):
            return mem, iso
        return None

    for code in range(2 ** n):
        mem = states[code][None, :]
        for iso in sign_flip_isometries(n):
            hit = try_pair(mem, iso)
            if hit:
                return UniquenessResult(hit, checked, all_tie)
    if n <= 4:
        for code in range(2 ** n):
            mem = states[code][None, :]
            for iso in all_isometries(n):
                hit = try_pair(mem, iso)
                if hit:
                    return UniquenessResult(hit, checked, all_tie)
    while checked < trials:
        k = int(rng.integers(1, 4))
        mem = states[rng.integers(0, 2 ** n, size=k)]
        iso = random_isometry(n, rng)
        hit = try_pair(mem, iso)
        if hit:
            return UniquenessResult(hit, checked, all_tie)
    return UniquenessResult(None, checked, all_tie)


def exhaustive_commutation_check(n=4):
    """Verify simple-Hebb commutation for EVERY memory subset and EVERY
    isometry at once.

    Energies are additive over memories, so the edge energy differences of
    all 2^(2^n) memory subsets are subset sums of the per-memory table;
    orientations (signs, ties included) are then compared in bulk against
    their isometry transports.  Returns (subsets, isometries, violations).
    """
    if n > 4:
        raise ValueError("exhaustive check is sized for n <= 4")
    states = states_matrix(n)
    p = 2 ** n
    dots = states @ states.T
    sq = dots ** 2
    neigh = np.arange(p)[:, None] ^ (1 << np.arange(n))[None, :]
    # d[m, c, b]: twice-energy difference along edge (c, c^bit b) from memory m
    d = (sq[:, neigh] - sq[:, :, None]).astype(np.int32)
    n_subsets = 2 ** p
    acc = np.zeros((n_subsets, p, n), dtype=np.int32)
    for m in range(p):
        block = 1 << m
        acc[block:2 * block] = acc[:block] + d[m]
    signs = np.sign(acc)
    masks = np.arange(n_subsets, dtype=np.int64)
    violations = 0
    n_iso = 0
    for h in all_isometries(n):
        n_iso += 1
        codes_h = h.state_code_map()
        inv = np.asarray(h.inverse_permutation())
        hmask = np.zeros_like(masks)
        for m in range(p):
            hmask |= ((masks >> m) & 1) << int(codes_h[m])
        transported = signs[hmask[:, None, None],
                            codes_h[None, :, None],
                            inv[None, None, :]]
        if not np.array_equal(transported, signs):
            violations += 1
    return n_subsets, n_iso, violations


def relax(net, state, seed=0, max_steps=100000):
    """Asynchronous descent: flip any unit that strictly lowers the energy;
    terminates at a state with no strictly-downhill neighbor."""
    rng = np.random.default_rng(seed)
    s = np.array(state, dtype=np.int64)
    for _ in range(max_steps):
        order = rng.permutation(net.n)
        moved = False
        for i in order:
            # flipping s_i changes E by 2 s_i sum_j w_ij s_j
            delta = 2 * s[i] * (net.weights[i] @ s)
            if delta < 0:
                s[i] = -s[i]
                moved = True
        if not moved:
            return s
    raise RuntimeError("relaxation did not terminate")  # pragma: no cover
