import numpy as np
import pytest

from locallearn import datasets, netsim, ssh
from locallearn.rules import get_rule
from locallearn.ssh import (
    InconsistentSetError, canonicalize, criteria, predict_and_verify,
    separates, train_clamped_hebb,
)


def make_set(inputs, targets):
    return datasets.TrainingSet(np.asarray(inputs, dtype=float),
                                np.asarray(targets, dtype=float))


class TestCanonicalize:
    def test_sign_fold(self):
        data = make_set([[1, 1], [-1, -1]], [1, -1])
        cset = canonicalize(data)
        assert np.array_equal(cset.vectors, [[1, 1], [1, 1]])

    def test_negative_target_flip(self):
        data = make_set([[1, 0]], [-1])
        assert np.array_equal(canonicalize(data).vectors, [[-1, 0]])

    def test_bias_prepended_before_fold(self):
        data = make_set([[1, -1]], [-1])
        cset = canonicalize(data, with_bias=True)
        assert np.array_equal(cset.vectors, [[-1, -1, 1]])

    def test_inconsistent_rejected(self):
        data = make_set([[1, 1], [-1, -1]], [1, 1])
        with pytest.raises(InconsistentSetError, match="consistent"):
            canonicalize(data)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            canonicalize(make_set([[0, 0]], [1]))

    def test_nonbinary_targets_rejected(self):
        with pytest.raises(ValueError, match="targets"):
            canonicalize(make_set([[1, 1]], [0.5]))


class TestCriteria:
    def test_scaled_identity_is_orthogonal(self):
        n = 10
        data = make_set(np.sqrt(n) * np.eye(n),
                        np.random.default_rng(0).choice([-1, 1], size=n))
        rep = criteria(canonicalize(data))
        assert rep.flags.mutually_orthogonal
        assert rep.flags.all_row_sums_positive
        assert rep.flags.equal_lengths

    def test_common_orthant_construction(self):
        rng = np.random.default_rng(1)
        cols = rng.uniform(0.1, 1.0, size=(8, 5)) \
            * rng.choice([-1.0, 1.0], size=(1, 5))
        rep = criteria(canonicalize(make_set(cols, np.ones(8))))
        assert rep.flags.common_orthant

    def test_antipodal_epsilon_counterexample(self):
        # {(1,0), (-eps,0)} canonical: cosine -1, row sums zero
        data = make_set([[1, 0], [-0.25, 0]], [1, 1])
        rep = criteria(canonicalize(data))
        assert not rep.flags.all_row_sums_positive
        assert not rep.flags.equal_lengths
        assert np.allclose(rep.row_sums, 0.0)

    def test_single_vector(self):
        rep = criteria(canonicalize(make_set([[1, 1, -1]], [1])))
        assert rep.flags.all_row_sums_positive
        assert np.allclose(rep.row_sums, 1.0)


class TestTraining:
    def test_epoch_increment_is_eta_mu(self):
        data = make_set([[1, -1], [1, 1]], [1, 1])
        _w, hist = train_clamped_hebb(data, eta=0.25, epochs=3)
        mu_c = np.array([1.0, 0.0])
        for k in range(3):
            assert np.array_equal(hist[k + 1] - hist[k], 0.25 * mu_c)

    def test_canonical_equivalence(self):
        # training on S and on S^c gives identical weights every epoch
        rng = np.random.default_rng(2)
        while True:
            x = rng.choice([-1.0, 1.0], size=(12, 6))
            t = rng.choice([-1.0, 1.0], size=12)
            data = make_set(x, t)
            try:
                cset = canonicalize(data)
                break
            except InconsistentSetError:
                continue
        canon = make_set(cset.vectors, np.ones(12))
        w0 = rng.normal(size=6)
        _, h1 = train_clamped_hebb(data, w0=w0, eta=0.1, epochs=20)
        _, h2 = train_clamped_hebb(canon, w0=w0, eta=0.1, epochs=20)
        assert np.array_equal(h1, h2)

    def test_online_matches_epoch_direction(self):
        # the on-line clamped rule accumulates the same per-epoch increment
        rng = np.random.default_rng(3)
        x = rng.choice([-1.0, 1.0], size=(9, 5))
        t = rng.choice([-1.0, 1.0], size=9)
        data = make_set(x, t)
        w0 = np.zeros(5)
        traj = netsim.train_unit(get_rule("clamped_hebb"), data,
                                 netsim.THRESHOLD11, 0.1, 7, seed=4, w0=w0)
        mu_c = (t[:, None] * x).mean(axis=0)
        assert np.allclose(traj.final, 0.1 * 9 * 7 * mu_c)


class TestPredictVerify:
    def test_orthogonal_true(self):
        n = 8
        data = make_set(np.sqrt(n) * np.eye(n),
                        np.random.default_rng(5).choice([-1, 1], size=n))
        res = predict_and_verify(data)
        assert res.predicted is True
        assert res.empirical is True

    def test_single_vector_true(self):
        res = predict_and_verify(make_set([[1, -1, 1]], [-1]))
        assert res.predicted is True and res.empirical is True

    def test_negative_row_sum_fails(self):
        # equal-length binary set with a non-positive row sum: iff branch
        rng = np.random.default_rng(6)
        found = None
        for _ in range(500):
            x = rng.choice([-1.0, 1.0], size=(6, 4))
            t = rng.choice([-1.0, 1.0], size=6)
            data = make_set(x, t)
            try:
                rep = criteria(canonicalize(data))
            except InconsistentSetError:
                continue
            if np.min(rep.row_sums) < -1e-9:
                found = data
                break
        assert found is not None
        res = predict_and_verify(found, epochs=10000, eta=0.1)
        assert res.predicted is False
        assert res.empirical is False

    def test_equal_length_iff_on_random_sets(self):
        rng = np.random.default_rng(7)
        done = 0
        while done < 60:
            x = rng.choice([-1.0, 1.0],
                           size=(int(rng.integers(2, 15)),
                                 int(rng.integers(3, 9))))
            t = rng.choice([-1.0, 1.0], size=len(x))
            data = make_set(x, t)
            try:
                res = predict_and_verify(data)
            except InconsistentSetError:
                continue
            assert res.predicted == res.empirical
            done += 1

    def test_random_init_positive_direction(self):
        # sufficient branches stay learnable from random starts too
        n = 8
        data = make_set(np.sqrt(n) * np.eye(n),
                        np.random.default_rng(8).choice([-1, 1], size=n))
        res = predict_and_verify(data, epochs=5000, w0_mode="random", seed=9)
        assert res.empirical is True

    def test_separates_tolerance_flags_ties(self):
        data = make_set([[1, 1], [1, -1]], [1, 1])
        cset = canonicalize(data)
        # w = (1, 1): margins are 2 and exactly 0 -> ambiguous, not separated
        ok, _margins, ambiguous = separates(np.array([1.0, 1.0]), cset)
        assert not ok
        assert ambiguous
