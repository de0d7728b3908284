"""Reference classifiers: nearest class mean, nearest neighbour, random prototypes.

All three share the small interface ``learn(x, label)`` / ``predict(x)`` /
``predict_batch(X)`` and keep class labels in first-seen order, which is
also the tie-break order.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DimensionMismatchError, EmptyModelError, NonFiniteInputError


class _LabelledModel:
    def __init__(self, d: int):
        self.d = d
        self.classes: list = []
        self._index: dict = {}

    def _register(self, label) -> int:
        idx = self._index.get(label)
        if idx is None:
            idx = self._index[label] = len(self.classes)
            self.classes.append(label)
        return idx

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.d:
            raise DimensionMismatchError(
                f"expected a vector of length {self.d}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteInputError("feature vector contains NaN or Inf")
        return x

    def _check_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None]
        if X.ndim != 2 or X.shape[1] != self.d:
            raise DimensionMismatchError(
                f"expected vectors of length {self.d}, got shape {X.shape}"
            )
        return X

    def predict(self, x):
        return self.predict_batch(self._check(x)[None])[0]

    @property
    def num_classes(self) -> int:
        return len(self.classes)


def _sq_dists(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - Y[None, :, :]
    return np.einsum("nmd,nmd->nm", diff, diff)


class NcmModel(_LabelledModel):
    """Nearest class mean with running per-class averages."""

    def __init__(self, d: int):
        super().__init__(d)
        self.means = np.zeros((0, d))
        self.counts = np.zeros(0, dtype=np.int64)

    def learn(self, x, label):
        x = self._check(x)
        idx = self._register(label)
        if idx == self.means.shape[0]:
            self.means = np.vstack([self.means, np.zeros(self.d)])
            self.counts = np.append(self.counts, 0)
        self.counts[idx] += 1
        self.means[idx] += (x - self.means[idx]) / self.counts[idx]
        return self

    def predict_batch(self, X, chunk: int = 1024) -> list:
        if not self.classes:
            raise EmptyModelError("NCM model has no class")
        X = self._check_batch(X)
        out = []
        for start in range(0, X.shape[0], chunk):
            # argmin returns the first minimum: smaller registration index wins
            best = _sq_dists(X[start:start + chunk], self.means).argmin(axis=1)
            out.extend(self.classes[i] for i in best)
        return out

    def memory_footprint(self, bytes_per_real: int = 4) -> int:
        return self.num_classes * self.d * bytes_per_real


class NnModel(_LabelledModel):
    """1-nearest-neighbour over every stored example."""

    RECORD_HEADER = struct.Struct("<I")

    def __init__(self, d: int):
        super().__init__(d)
        self._data = np.zeros((16, d))
        self._labels = np.zeros(16, dtype=np.int64)
        self.size = 0

    @property
    def vectors(self) -> np.ndarray:
        return self._data[:self.size]

    def learn(self, x, label):
        x = self._check(x)
        idx = self._register(label)
        if self.size == self._data.shape[0]:
            self._data = np.vstack([self._data, np.zeros_like(self._data)])
            self._labels = np.concatenate([self._labels, np.zeros_like(self._labels)])
        self._data[self.size] = x
        self._labels[self.size] = idx
        self.size += 1
        return self

    def predict_batch(self, X, chunk: int = 256) -> list:
        if self.size == 0:
            raise EmptyModelError("NN model has no stored example")
        X = self._check_batch(X)
        out = []
        for start in range(0, X.shape[0], chunk):
            best = _sq_dists(X[start:start + chunk], self.vectors).argmin(axis=1)
            out.extend(self.classes[self._labels[i]] for i in best)
        return out

    def memory_footprint(self, bytes_per_real: int = 4) -> int:
        return self.size * self.d * bytes_per_real

    def serialize(self) -> bytes:
        """Header (dim, count) then one record per example: label index + float32 vector."""
        parts = [struct.pack("<4sII", b"TNN1", self.d, self.size)]
        vecs = self.vectors.astype("<f4")
        for i in range(self.size):
            parts.append(self.RECORD_HEADER.pack(int(self._labels[i])))
            parts.append(vecs[i].tobytes())
        return b"".join(parts)


class RandomPrototypeModel(_LabelledModel):
    """Up to ``k`` stored examples per class, kept by reservoir sampling.

    Once a class has seen ``m > k`` examples, each of them sits in the
    reservoir with probability ``k / m``. Prediction is nearest stored
    prototype over the whole vector.
    """

    def __init__(self, d: int, k: int, seed: int = 0):
        super().__init__(d)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.reservoirs: list[list[np.ndarray]] = []
        self.seen: list[int] = []

    def learn(self, x, label):
        x = self._check(x)
        idx = self._register(label)
        if idx == len(self.reservoirs):
            self.reservoirs.append([])
            self.seen.append(0)
        self.seen[idx] += 1
        m = self.seen[idx]
        res = self.reservoirs[idx]
        if len(res) < self.k:
            res.append(x.copy())
        else:
            j = int(self.rng.integers(m))
            if j < self.k:
                res[j] = x.copy()
        return self

    def predict_batch(self, X, chunk: int = 256) -> list:
        if not any(self.reservoirs):
            raise EmptyModelError("prototype model has no stored example")
        X = self._check_batch(X)
        protos = np.vstack([np.vstack(r) for r in self.reservoirs if r])
        owner = np.repeat(np.arange(len(self.reservoirs)), [len(r) for r in self.reservoirs])
        out = []
        for start in range(0, X.shape[0], chunk):
            d2 = _sq_dists(X[start:start + chunk], protos)
            # per class nearest prototype, then first class attaining the minimum
            per_class = np.full((d2.shape[0], len(self.reservoirs)), np.inf)
            np.minimum.at(per_class.T, owner, d2.T)
            out.extend(self.classes[i] for i in per_class.argmin(axis=1))
        return out

    def memory_footprint(self, bytes_per_real: int = 4) -> int:
        return sum(len(r) for r in self.reservoirs) * self.d * bytes_per_real


# Functional aliases mirroring the operation names.

def ncm_learn(model: NcmModel, x, c):
    return model.learn(x, c)


def ncm_predict(model: NcmModel, x):
    return model.predict(x)


def nn_learn(model: NnModel, x, c):
    return model.learn(x, c)


def nn_predict(model: NnModel, x):
    return model.predict(x)


def proto_learn(model: RandomPrototypeModel, x, c):
    return model.learn(x, c)


def proto_predict(model: RandomPrototypeModel, x):
    return model.predict(x)
