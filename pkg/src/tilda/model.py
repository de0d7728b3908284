"""Anchor-vector classifier learned one example at a time.

Each feature vector is cut into ``P`` contiguous subvectors. For every
class and every subspace the model keeps ``k`` anchors with counters.
Learning moves one anchor per subspace towards the input (a barycentric
update weighted by the counter); prediction lets each subspace vote for
the class owning its nearest anchor and takes the majority.

Anchors live in a single ``(C, P, k, d/P)`` float64 array and counters in
a ``(C, P, k)`` uint64 array. Learning class ``c`` only ever writes
``anchors[c]`` and ``counts[c]``; prediction never writes at all, so a
store can be shared between reader threads once learning has stopped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyModelError,
    InvalidConfigError,
    NonFiniteInputError,
)

MAX_SEED = 2**64


@dataclass(frozen=True)
class ModelConfig:
    P: int
    k: int
    d: int
    seed: int = 0

    def __post_init__(self):
        for name in ("P", "k", "d"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidConfigError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise InvalidConfigError(f"{name} must be >= 1, got {value}")
        if self.d % self.P:
            raise InvalidConfigError(
                f"feature dimension d={self.d} is not divisible by P={self.P}"
            )
        if not 0 <= int(self.seed) < MAX_SEED:
            raise InvalidConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @property
    def sub_dim(self) -> int:
        return self.d // self.P

    def reals_per_class(self) -> int:
        """Number of anchor reals allocated when a class is registered."""
        return self.P * self.k * self.sub_dim


@dataclass
class Prediction:
    """Outcome of a majority vote.

    ``votes`` always lists every registered class (zero counts included).
    For a single feature vector the votes come from the ``P`` subspaces and
    ``subspace_decisions`` holds each subspace's choice; for a vote over
    augmented variants the votes come from the variants and
    ``variant_predictions`` holds the per-variant results.
    """

    label: Hashable
    votes: dict
    subspace_decisions: tuple = ()
    tie_broken: bool = False
    variant_predictions: tuple = ()
    # per-class sum of minimal distances, the tie-break key
    distance_sums: dict = field(default_factory=dict, repr=False)


def split(x, P: int) -> list[np.ndarray]:
    """Cut ``x`` into ``P`` contiguous, equally sized subvectors."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-d vector, got shape {x.shape}")
    if P < 1 or x.shape[0] % P:
        raise DimensionMismatchError(
            f"vector of length {x.shape[0]} cannot be split into {P} equal parts"
        )
    return [part.copy() for part in np.split(x, P)]


class AnchorStore:
    """Model state: anchors, counters, class table and tie-breaking RNG."""

    def __init__(self, config: ModelConfig):
        self.config = config
        c = config
        self.classes: list = []
        self._index: dict = {}
        # capacity grows geometrically; ``anchors``/``counts`` are exact-size views
        self._anchor_buf = np.zeros((0, c.P, c.k, c.sub_dim), dtype=np.float64)
        self._count_buf = np.zeros((0, c.P, c.k), dtype=np.uint64)
        self.rng = np.random.Generator(np.random.PCG64(int(c.seed)))

    @property
    def anchors(self) -> np.ndarray:
        return self._anchor_buf[:len(self.classes)]

    @anchors.setter
    def anchors(self, value):
        self._anchor_buf = np.array(value, dtype=np.float64)

    @property
    def counts(self) -> np.ndarray:
        return self._count_buf[:len(self.classes)]

    @counts.setter
    def counts(self, value):
        self._count_buf = np.array(value, dtype=np.uint64)

    # -- class table ------------------------------------------------------

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_index(self, label) -> int:
        return self._index[label]

    def _register(self, label) -> int:
        idx = self._index.get(label)
        if idx is not None:
            return idx
        idx = len(self.classes)
        if idx == self._anchor_buf.shape[0]:
            grow = max(4, idx)
            self._anchor_buf = np.concatenate(
                [self._anchor_buf, np.zeros((grow,) + self._anchor_buf.shape[1:])]
            )
            self._count_buf = np.concatenate(
                [self._count_buf, np.zeros((grow,) + self._count_buf.shape[1:], dtype=np.uint64)]
            )
        self.classes.append(label)
        self._index[label] = idx
        return idx

    def learned_count(self, label) -> int:
        """Examples learned for ``label`` (identical in every subspace)."""
        return int(self.counts[self._index[label], 0].sum())

    # -- validation -------------------------------------------------------

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.config.d:
            raise DimensionMismatchError(
                f"expected a vector of length {self.config.d}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteInputError("feature vector contains NaN or Inf")
        return x

    def _check_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.config.d:
            raise DimensionMismatchError(
                f"expected vectors of length {self.config.d}, got shape {X.shape}"
            )
        if not np.all(np.isfinite(X)):
            raise NonFiniteInputError("feature vectors contain NaN or Inf")
        return X

    # -- learning ---------------------------------------------------------

    def learn_one(self, x, label) -> "AnchorStore":
        """Absorb one training vector of class ``label``.

        In each subspace the anchor minimising ``distance * counter`` is
        chosen (exact ties drawn uniformly from the store RNG), replaced by
        the barycentre of itself weighted by its counter and the input
        subvector weighted by one, and its counter is incremented.
        """
        x = self._check_vector(x)
        c = self.config
        idx = self._register(label)
        Y = self.anchors[idx]
        N = self.counts[idx]
        xs = x.reshape(c.P, c.sub_dim)

        diff = Y - xs[:, None, :]
        dist = np.sqrt(np.einsum("pks,pks->pk", diff, diff))
        penalty = dist * N.astype(np.float64)
        best = penalty.min(axis=1)
        for p in range(c.P):
            (ties,) = np.nonzero(penalty[p] == best[p])
            slot = ties[0] if ties.size == 1 else ties[self.rng.integers(ties.size)]
            n = float(N[p, slot])
            Y[p, slot] = (Y[p, slot] * n + xs[p]) / (n + 1.0)
            N[p, slot] += np.uint64(1)
        return self

    def learn_augmented(self, variants, label) -> "AnchorStore":
        """Learn every variant of one training input, in array order."""
        X = self._check_batch(variants)
        for x in X:
            self.learn_one(x, label)
        return self

    # -- prediction -------------------------------------------------------

    def _distances(self, X: np.ndarray) -> np.ndarray:
        """Distances ``(n, C, P, k)`` to every anchor, inf where counter is 0."""
        c = self.config
        xs = X.reshape(X.shape[0], 1, c.P, 1, c.sub_dim)
        diff = xs - self.anchors[None]
        dist = np.sqrt(np.einsum("ncpks,ncpks->ncpk", diff, diff))
        dist[:, self.counts == 0] = np.inf
        return dist

    def _vote(self, dist: np.ndarray) -> Prediction:
        # dist: (C, P, k) for one vector
        dmin = dist.min(axis=2)  # (C, P)
        finite = np.where(np.isfinite(dmin), dmin, 0.0)
        sums = finite.sum(axis=1)
        # classes with no active anchor in a subspace cannot win there
        decisions = []
        for p in range(dmin.shape[1]):
            col = dmin[:, p]
            cands = np.nonzero(col == col.min())[0]
            decisions.append(_break_tie(cands, sums))
        votes = np.bincount(decisions, minlength=len(self.classes))
        top = np.nonzero(votes == votes.max())[0]
        winner = _break_tie(top, sums)
        return Prediction(
            label=self.classes[winner],
            votes={lab: int(v) for lab, v in zip(self.classes, votes)},
            subspace_decisions=tuple(self.classes[i] for i in decisions),
            tie_broken=top.size > 1,
            distance_sums={lab: float(s) for lab, s in zip(self.classes, sums)},
        )

    def _require_trained(self):
        if not self.classes or not self.counts.any():
            raise EmptyModelError("model has not learned any example")

    def predict_one(self, x) -> Prediction:
        """Classify one feature vector by a majority vote over subspaces."""
        self._require_trained()
        x = self._check_vector(x)
        return self._vote(self._distances(x[None])[0])

    def predict_batch(self, X, chunk: int = 256) -> list[Prediction]:
        """``predict_one`` over the rows of ``X``; same results, less overhead."""
        self._require_trained()
        X = self._check_batch(X)
        out = []
        for start in range(0, X.shape[0], chunk):
            dist = self._distances(X[start:start + chunk])
            out.extend(self._vote(d) for d in dist)
        return out

    def predict_augmented(self, variants) -> Prediction:
        """Predict each variant independently, then vote over the variants."""
        self._require_trained()
        X = self._check_batch(variants)
        if X.shape[0] == 0:
            raise ValueError("at least one variant is required")
        per_variant = self.predict_batch(X)
        return aggregate_votes(per_variant, self.classes)

    # -- accounting -------------------------------------------------------

    def memory_footprint(self, bytes_per_real: int = 4) -> int:
        """Bytes of anchor payload: ``C * k * d * bytes_per_real``."""
        c = self.config
        return self.num_classes * c.k * c.d * bytes_per_real

    def counter_footprint(self, bytes_per_counter: int = 8) -> int:
        c = self.config
        return self.num_classes * c.P * c.k * bytes_per_counter

    def __eq__(self, other):
        if not isinstance(other, AnchorStore):
            return NotImplemented
        return (
            self.config == other.config
            and self.classes == other.classes
            and np.array_equal(self.anchors, other.anchors)
            and np.array_equal(self.counts, other.counts)
            and self.rng.bit_generator.state == other.rng.bit_generator.state
        )

    def __repr__(self):
        c = self.config
        return f"AnchorStore(P={c.P}, k={c.k}, d={c.d}, classes={self.num_classes})"


def _break_tie(cands: np.ndarray, sums: np.ndarray) -> int:
    """Smallest distance sum among ``cands``, then smallest registration index."""
    if cands.size == 1:
        return int(cands[0])
    key = sums[cands]
    return int(cands[np.nonzero(key == key.min())[0][0]])


def aggregate_votes(predictions: Sequence[Prediction], classes: Sequence) -> Prediction:
    """Second-level majority vote over per-variant predictions.

    Ties go to the class with the smallest distance sum accumulated over
    all variants, then to the earliest registered class.
    """
    if not predictions:
        raise ValueError("at least one variant is required")
    index = {lab: i for i, lab in enumerate(classes)}
    votes = np.zeros(len(classes), dtype=np.int64)
    sums = np.zeros(len(classes))
    for pred in predictions:
        votes[index[pred.label]] += 1
        for lab, s in pred.distance_sums.items():
            sums[index[lab]] += s
    top = np.nonzero(votes == votes.max())[0]
    winner = _break_tie(top, sums)
    return Prediction(
        label=classes[winner],
        votes={lab: int(v) for lab, v in zip(classes, votes)},
        tie_broken=top.size > 1,
        variant_predictions=tuple(predictions),
        distance_sums={lab: float(s) for lab, s in zip(classes, sums)},
    )


# Functional aliases mirroring the operation names.

def new_model(config: ModelConfig) -> AnchorStore:
    return AnchorStore(config)


def learn_one(store: AnchorStore, x, label) -> AnchorStore:
    return store.learn_one(x, label)


def learn_augmented(store: AnchorStore, variants, label) -> AnchorStore:
    return store.learn_augmented(variants, label)


def predict_one(store: AnchorStore, x) -> Prediction:
    return store.predict_one(x)


def predict_augmented(store: AnchorStore, variants) -> Prediction:
    return store.predict_augmented(variants)


def memory_footprint(store: AnchorStore, bytes_per_real: int = 4) -> int:
    return store.memory_footprint(bytes_per_real)


def footprint_ratio(num_classes: int, k: int, d: int, num_examples: int) -> float:
    """Anchor payload relative to storing every training vector (same dtype)."""
    return (num_classes * k * d) / (num_examples * d)
