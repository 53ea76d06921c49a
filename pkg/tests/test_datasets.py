import numpy as np
import pytest

from locallearn import datasets
from locallearn.datasets import (
    IdxFormatError, TrainingSet, boolean_table, clustered_binary,
    clustered_binary_split, gaussian, generate, idx_dataset, linsep_random,
    read_idx, write_idx,
)


class TestTrainingSet:
    def test_row_count_mismatch(self):
        with pytest.raises(ValueError, match="example count"):
            TrainingSet(np.zeros((3, 2)), np.zeros(4))

    def test_with_bias(self):
        ds = TrainingSet(np.array([[2., 3.]]))
        out = ds.with_bias()
        assert np.array_equal(out.inputs, [[1., 2., 3.]])
        assert out.metadata["bias"]


class TestGenerators:
    def test_clustered_binary_hamming(self):
        ds = clustered_binary(10, 100, 100, flip_prob=0.05, seed=0)
        assert ds.inputs.shape == (1000, 100)
        cents = ds.metadata["centroids"]
        labels = ds.metadata["labels"]
        dists = [(ds.inputs[i] != cents[labels[i]]).sum()
                 for i in range(1000)]
        mean = np.mean(dists)
        # each bit flips independently with p = 0.05: 5 +- 3 sigma
        assert abs(mean - 5.0) <= 3 * np.sqrt(100 * 0.05 * 0.95)
        assert np.all(np.abs(ds.inputs) == 1.0)

    def test_clustered_split_shares_centroids(self):
        train, test = clustered_binary_split(3, 10, 5, 20, seed=1)
        assert np.array_equal(train.metadata["centroids"],
                              test.metadata["centroids"])
        assert train.inputs.shape == (30, 20)
        assert test.inputs.shape == (15, 20)

    def test_xor_table(self):
        ds = boolean_table(2, "XOR")
        assert np.array_equal(ds.targets, [-1, 1, 1, -1])
        assert np.array_equal(ds.inputs[0], [-1, -1])
        assert np.array_equal(ds.inputs[3], [1, 1])

    def test_integer_code_table(self):
        # code bits are MSB-first over rows
        ds = boolean_table(2, 0b0110)
        assert np.array_equal(ds.targets, [-1, 1, 1, -1])

    def test_gaussian_moments(self):
        ds = gaussian(4, 20000, mean=0.5, cov=2.0, seed=2)
        assert abs(ds.inputs.mean() - 0.5) < 0.05
        assert abs(ds.inputs.var() - 2.0) < 0.1

    def test_gaussian_diagonal_covariance(self):
        from locallearn.moments import compute_moments
        ds = gaussian(4, 50000, mean=0.0, cov=1.0, seed=3)
        mom = compute_moments(ds)
        off = mom.sigma_ii - np.diag(np.diag(mom.sigma_ii))
        # off-diagonal second moments ~ N(0, 1/sqrt(M)): 3 standard errors
        assert np.max(np.abs(off)) < 3.5 / np.sqrt(50000)

    def test_linsep_is_separable(self):
        ds = linsep_random(5, 30, seed=4)
        from scipy.optimize import linprog
        x = np.hstack([ds.inputs, np.ones((30, 1))])
        res = linprog(c=np.zeros(6), A_ub=-ds.targets[:, None] * x,
                      b_ub=-np.ones(30), bounds=[(None, None)] * 6,
                      method="highs")
        assert res.status == 0

    def test_determinism(self):
        a = clustered_binary(2, 5, 8, seed=7)
        b = clustered_binary(2, 5, 8, seed=7)
        assert np.array_equal(a.inputs, b.inputs)

    def test_generate_dispatch(self):
        ds = generate({"kind": "boolean_table", "n": 2, "function": "AND"},
                      seed=0)
        assert ds.targets[-1] == 1.0
        with pytest.raises(ValueError, match="unknown generator"):
            generate({"kind": "nope"}, seed=0)


class TestIdx:
    def test_round_trip(self, tmp_path):
        arr = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
        path = tmp_path / "a.idx"
        write_idx(path, arr)
        back = read_idx(path)
        assert back.dtype == np.uint8
        assert np.array_equal(back, arr)

    def test_header_is_big_endian(self, tmp_path):
        path = tmp_path / "b.idx"
        write_idx(path, np.zeros((1, 300), dtype=np.uint8))
        raw = path.read_bytes()
        assert raw[:4] == bytes([0, 0, 0x08, 2])
        assert int.from_bytes(raw[8:12], "big") == 300

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "c.idx"
        path.write_bytes(b"\x01\x00\x08\x01" + b"\x00" * 8)
        with pytest.raises(IdxFormatError, match="magic"):
            read_idx(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "d.idx"
        path.write_bytes(bytes([0, 0, 0x08, 1]) + (5).to_bytes(4, "big")
                         + b"\x00\x01")
        with pytest.raises(IdxFormatError, match="payload"):
            read_idx(path)

    def test_dataset_binarization(self, tmp_path):
        imgs = (np.arange(12, dtype=np.uint8).reshape(3, 2, 2) * 20)
        labels = np.array([9, 1, 9], dtype=np.uint8)
        ip, lp = tmp_path / "img.idx", tmp_path / "lab.idx"
        write_idx(ip, imgs)
        write_idx(lp, labels)
        ds = idx_dataset(ip, lp, binarize_threshold=0.2, target_digit=9)
        assert set(np.unique(ds.inputs)) <= {-1.0, 1.0}
        assert np.array_equal(ds.targets, [1.0, -1.0, 1.0])
        # pixel > 51 (0.2*255) maps to +1
        assert ds.inputs[0, 0] == -1.0
        assert ds.inputs[2, 3] == 1.0

    def test_subset(self, tmp_path):
        imgs = np.zeros((10, 2, 2), dtype=np.uint8)
        path = tmp_path / "e.idx"
        write_idx(path, imgs)
        ds = idx_dataset(path, subset=4)
        assert ds.n_examples == 4
