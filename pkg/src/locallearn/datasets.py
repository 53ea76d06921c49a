"""Training sets and generators: Gaussian, clustered binary, Boolean truth
tables, random linearly separable data, and IDX container files."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrainingSet:
    inputs: np.ndarray
    targets: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be a 2-d array (examples x features)")
        if self.targets is not None:
            self.targets = np.asarray(self.targets, dtype=np.float64)
            if self.targets.shape[0] != self.inputs.shape[0]:
                raise ValueError("inputs and targets disagree on example count")

    @property
    def n_examples(self):
        return self.inputs.shape[0]

    @property
    def n_features(self):
        return self.inputs.shape[1]

    def with_bias(self):
        """Prepend a constant +1 input component (index 0)."""
        ones = np.ones((self.n_examples, 1))
        meta = dict(self.metadata, bias=True)
        return TrainingSet(np.hstack([ones, self.inputs]), self.targets, meta)


def gaussian(n_features, n_examples, mean=0.0, cov=1.0, seed=0, targets="none"):
    """I.i.d. Gaussian rows; targets 'none', 'pm1' (fair coin), or 'linear'
    (sign of a random hyperplane, guaranteed tie-free)."""
    rng = np.random.default_rng(seed)
    mean_vec = np.broadcast_to(np.asarray(mean, dtype=float), (n_features,))
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        x = rng.normal(0.0, np.sqrt(cov), size=(n_examples, n_features))
    elif cov.ndim == 1:
        x = rng.normal(0.0, np.sqrt(cov), size=(n_examples, n_features))
    else:
        x = rng.multivariate_normal(np.zeros(n_features), cov, size=n_examples)
    x = x + mean_vec
    t = None
    if targets == "pm1":
        t = rng.choice([-1.0, 1.0], size=n_examples)
    elif targets == "linear":
        v = rng.normal(size=n_features)
        margins = x @ v
        while np.any(margins == 0.0):  # pragma: no cover - measure zero
            v = rng.normal(size=n_features)
            margins = x @ v
        t = np.sign(margins)
    elif targets != "none":
        raise ValueError(f"unknown target mode {targets!r}")
    meta = {"generator": "gaussian", "seed": seed, "targets": targets}
    return TrainingSet(x, t, meta)


def clustered_binary(n_clusters, per_cluster, n_bits, flip_prob=0.05, seed=0,
                     centroids=None):
    """Binary +-1 clusters: fair-coin centroids, independent bit flips."""
    rng = np.random.default_rng(seed)
    if centroids is None:
        centroids = rng.choice([-1.0, 1.0], size=(n_clusters, n_bits))
    else:
        centroids = np.asarray(centroids, dtype=np.float64)
    rows = []
    labels = []
    for c in range(n_clusters):
        flips = rng.random((per_cluster, n_bits)) < flip_prob
        block = np.where(flips, -centroids[c], centroids[c])
        rows.append(block)
        labels.extend([c] * per_cluster)
    x = np.vstack(rows)
    meta = {"generator": "clustered_binary", "seed": seed,
            "centroids": centroids, "labels": np.array(labels),
            "flip_prob": flip_prob}
    return TrainingSet(x, None, meta)


def clustered_binary_split(n_clusters, train_per_cluster, test_per_cluster,
                           n_bits, flip_prob=0.05, seed=0):
    """Train and test sets drawn around the same centroids."""
    rng = np.random.default_rng(seed)
    centroids = rng.choice([-1.0, 1.0], size=(n_clusters, n_bits))
    train = clustered_binary(n_clusters, train_per_cluster, n_bits, flip_prob,
                             seed=rng.integers(2**63), centroids=centroids)
    test = clustered_binary(n_clusters, test_per_cluster, n_bits, flip_prob,
                            seed=rng.integers(2**63), centroids=centroids)
    return train, test


def boolean_inputs(n):
    """All 2^n +-1 input rows; row r reads the bits of r, component 0 first."""
    rows = np.empty((2 ** n, n))
    for r in range(2 ** n):
        for j in range(n):
            rows[r, j] = 1.0 if (r >> (n - 1 - j)) & 1 else -1.0
    return rows


_NAMED_BOOLEANS = {
    "AND": lambda x: np.where(np.all(x > 0, axis=1), 1.0, -1.0),
    "OR": lambda x: np.where(np.any(x > 0, axis=1), 1.0, -1.0),
    "XOR": lambda x: np.where(np.sum(x > 0, axis=1) % 2 == 1, 1.0, -1.0),
    "NAND": lambda x: np.where(np.all(x > 0, axis=1), -1.0, 1.0),
    "XNOR": lambda x: np.where(np.sum(x > 0, axis=1) % 2 == 1, -1.0, 1.0),
}


def boolean_table(n, function):
    """Truth-table dataset over +-1 inputs.

    ``function`` is a name ('XOR', 'AND', ...), an integer code whose bit
    (2^n - 1 - r) gives the output on row r, or an explicit +-1 table.
    """
    x = boolean_inputs(n)
    if isinstance(function, str):
        t = _NAMED_BOOLEANS[function.upper()](x)
    elif np.isscalar(function) and not isinstance(function, (list, np.ndarray)):
        code = int(function)
        size = 2 ** n
        t = np.array([1.0 if (code >> (size - 1 - r)) & 1 else -1.0
                      for r in range(size)])
    else:
        t = np.asarray(function, dtype=np.float64)
        if t.shape != (2 ** n,) or not np.all(np.abs(t) == 1.0):
            raise ValueError("truth table must be +-1 of length 2^n")
    meta = {"generator": "boolean_table", "n": n, "function": str(function)}
    return TrainingSet(x, t, meta)


def linsep_random(n_features, n_examples, seed=0):
    """Random +-1 inputs labeled by a random hyperplane (with bias)."""
    rng = np.random.default_rng(seed)
    x = rng.choice([-1.0, 1.0], size=(n_examples, n_features))
    while True:
        w = rng.normal(size=n_features)
        b = rng.normal()
        margins = x @ w + b
        if np.all(margins != 0.0):
            break
    t = np.sign(margins)
    meta = {"generator": "linsep_random", "seed": seed}
    return TrainingSet(x, t, meta)


# ---------------------------------------------------------------------------
# IDX container files (the MNIST on-disk format)
# ---------------------------------------------------------------------------

_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


class IdxFormatError(ValueError):
    pass


def read_idx(path):
    """Read an IDX file: 2 zero bytes, dtype code, ndim, big-endian dims."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if len(magic) != 4 or magic[0] != 0 or magic[1] != 0:
            raise IdxFormatError(f"bad IDX magic in {path}")
        dtype_code, ndim = magic[2], magic[3]
        if dtype_code not in _IDX_DTYPES:
            raise IdxFormatError(f"unknown IDX dtype code 0x{dtype_code:02x}")
        dims = struct.unpack(f">{ndim}I", fh.read(4 * ndim))
        data = np.frombuffer(fh.read(), dtype=_IDX_DTYPES[dtype_code])
    expected = int(np.prod(dims)) if dims else 0
    if data.size != expected:
        raise IdxFormatError(
            f"IDX payload length {data.size} does not match dims {dims}")
    return data.reshape(dims).astype(data.dtype.newbyteorder("="))


def write_idx(path, array):
    """Write an array in IDX format (round trips with read_idx)."""
    array = np.asarray(array)
    code_by_kind = {("u", 1): 0x08, ("i", 1): 0x09, ("i", 2): 0x0B,
                    ("i", 4): 0x0C, ("f", 4): 0x0D, ("f", 8): 0x0E}
    key = (array.dtype.kind, array.dtype.itemsize)
    if key not in code_by_kind:
        raise IdxFormatError(f"dtype {array.dtype} not representable in IDX")
    with open(path, "wb") as fh:
        fh.write(bytes([0, 0, code_by_kind[key], array.ndim]))
        fh.write(struct.pack(f">{array.ndim}I", *array.shape))
        fh.write(array.astype(array.dtype.newbyteorder(">")).tobytes())


def idx_dataset(images_path, labels_path=None, subset=None,
                binarize_threshold=None, target_digit=None):
    """Dataset from IDX files; pixels scaled to [0,1] for integer containers.

    ``binarize_threshold`` maps pixels to {-1,+1}; ``target_digit`` turns
    labels into +-1 one-vs-rest targets.
    """
    images = read_idx(images_path)
    x = images.reshape(images.shape[0], -1).astype(np.float64)
    if images.dtype.kind in "ui":
        x = x / 255.0
    t = None
    if labels_path is not None:
        labels = read_idx(labels_path).astype(np.int64)
        if labels.shape[0] != x.shape[0]:
            raise IdxFormatError("image and label counts differ")
        if target_digit is not None:
            t = np.where(labels == target_digit, 1.0, -1.0)
        else:
            t = labels.astype(np.float64)
    if subset is not None:
        x = x[:subset]
        t = t[:subset] if t is not None else None
    if binarize_threshold is not None:
        x = np.where(x > binarize_threshold, 1.0, -1.0)
    meta = {"generator": "idx_file", "path": str(images_path)}
    return TrainingSet(x, t, meta)


_GENERATORS = {
    "gaussian": gaussian,
    "clustered_binary": clustered_binary,
    "boolean_table": boolean_table,
    "linsep_random": linsep_random,
}


def generate(descriptor, seed=0):
    """Build a TrainingSet from a descriptor dict {'kind': ..., params}."""
    desc = dict(descriptor)
    kind = desc.pop("kind", None)
    if kind == "idx_file":
        return idx_dataset(**desc)
    if kind not in _GENERATORS:
        raise ValueError(f"unknown generator kind {kind!r}")
    if kind in ("gaussian", "clustered_binary", "linsep_random"):
        desc.setdefault("seed", seed)
    return _GENERATORS[kind](**desc)
