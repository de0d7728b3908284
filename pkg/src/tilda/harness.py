"""Streaming evaluation protocols and report rendering.

Three scenarios replay a training set into a learner and measure test
accuracy along the way:

* class-incremental (``ci``): one class at a time, all of its examples;
* example-incremental (``ei``): ``parts`` stratified slices, one at a time;
* one-shot (``oneshot``): single examples in a shuffled, class-mixed order.

Every training example is handed to the learner exactly once.
"""

from __future__ import annotations

import io as _io
import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .augment import ProjectionExtractor
from .baselines import NcmModel, NnModel, RandomPrototypeModel
from .errors import (
    DimensionMismatchError,
    EmptySplitError,
    StratificationError,
    UnknownMethodError,
    UsageError,
)
from .model import AnchorStore, ModelConfig, aggregate_votes

METHODS = ("tilda", "tilda-da", "tilda-p", "tilda-ncm", "ncm", "nn")
MODES = ("ci", "ei", "oneshot")
COLUMNS = ("stage", "classes", "examples", "accuracy", "bytes")


# -- datasets --------------------------------------------------------------

@dataclass
class Dataset:
    """Labelled examples, each carrying ``R`` feature variants.

    ``variants`` has shape ``(N, R, d)``. Datasets built from feature files
    have ``R = 1``; datasets built from images hold all ten augmented
    variants, original first.
    """

    variants: np.ndarray
    labels: list

    def __post_init__(self):
        self.variants = np.asarray(self.variants, dtype=np.float64)
        if self.variants.ndim == 2:
            self.variants = self.variants[:, None, :]
        if self.variants.ndim != 3:
            raise DimensionMismatchError(
                f"variants must be (N, R, d), got shape {self.variants.shape}"
            )
        self.labels = list(self.labels)
        if len(self.labels) != self.variants.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.labels)} labels for {self.variants.shape[0]} examples"
            )

    @classmethod
    def from_features(cls, X, labels) -> "Dataset":
        return cls(np.asarray(X, dtype=np.float64)[:, None, :], labels)

    @classmethod
    def from_images(cls, images, labels, extractor=None) -> "Dataset":
        extractor = extractor or ProjectionExtractor()
        feats = [extractor.variants(img) for img in images]
        if not feats:
            return cls(np.zeros((0, 10, 0)), [])
        return cls(np.stack(feats), labels)

    def __len__(self):
        return self.variants.shape[0]

    @property
    def dim(self) -> int:
        return self.variants.shape[2]

    @property
    def num_variants(self) -> int:
        return self.variants.shape[1]

    @property
    def features(self) -> np.ndarray:
        """Original (un-augmented) feature vectors, ``(N, d)``."""
        return self.variants[:, 0, :]

    def class_order(self) -> list:
        seen = {}
        for lab in self.labels:
            seen.setdefault(lab, None)
        return list(seen)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.variants[idx], [self.labels[i] for i in idx])


def synth_gaussian(
    classes: int,
    dim: int,
    per_class: int,
    sep: float = 6.0,
    seed: int = 0,
    test_per_class: int = 0,
    scales=None,
):
    """Gaussian clusters, ``sep`` noise units apart per coordinate.

    Centre coordinates are i.i.d. normal with standard deviation
    ``sep / sqrt(2)``, so two centres differ by ``sep`` (rms) in every
    coordinate, measured in units of the noise ``scales`` (default 1).
    With ``test_per_class`` > 0 a second, disjoint draw is returned as the
    test set. Labels are ``"c0"``, ``"c1"``, ...
    """
    if classes < 1 or dim < 1 or per_class < 0:
        raise UsageError("classes and dim must be >= 1, per_class >= 0")
    rng = np.random.default_rng(seed)
    centres = rng.standard_normal((classes, dim)) * (sep / np.sqrt(2.0))
    scales = np.ones(dim) if scales is None else np.broadcast_to(np.asarray(scales, dtype=np.float64), (dim,))

    def draw(n):
        X = centres[:, None, :] + rng.standard_normal((classes, n, dim)) * scales
        labels = [f"c{c}" for c in range(classes) for _ in range(n)]
        return Dataset.from_features(X.reshape(classes * n, dim), labels)

    train = draw(per_class)
    if test_per_class:
        return train, draw(test_per_class)
    return train


def anisotropic_scales(dim: int, noisy_fraction: float = 0.25, ratio: float = 8.0) -> np.ndarray:
    """Per-coordinate noise: the trailing ``noisy_fraction`` of coordinates get ``ratio``x."""
    scales = np.ones(dim)
    n_noisy = int(round(dim * noisy_fraction))
    if n_noisy:
        scales[dim - n_noisy:] = ratio
    return scales


# -- learners --------------------------------------------------------------

class TildaLearner:
    def __init__(self, d: int, P: int, k: int, seed: int = 0, augment: bool = True):
        self.store = AnchorStore(ModelConfig(P=P, k=k, d=d, seed=seed))
        self.augment = augment

    def learn(self, variants, label):
        if self.augment:
            self.store.learn_augmented(variants, label)
        else:
            self.store.learn_one(variants[0], label)

    def predict(self, data: Dataset) -> list:
        if len(data) == 0:
            return []
        R = data.num_variants if self.augment else 1
        flat = data.variants[:, :R, :].reshape(-1, data.dim)
        preds = self.store.predict_batch(flat)
        if R == 1:
            return [p.label for p in preds]
        return [
            aggregate_votes(preds[i * R:(i + 1) * R], self.store.classes).label
            for i in range(len(data))
        ]

    def model_bytes(self) -> int:
        return self.store.memory_footprint(4)


class BaselineLearner:
    """Adapts a baseline model; with ``augment`` it learns and votes over variants."""

    def __init__(self, model, augment: bool = False):
        self.model = model
        self.augment = augment

    def learn(self, variants, label):
        for x in (variants if self.augment else variants[:1]):
            self.model.learn(x, label)

    def predict(self, data: Dataset) -> list:
        if len(data) == 0:
            return []
        R = data.num_variants if self.augment else 1
        flat = data.variants[:, :R, :].reshape(-1, data.dim)
        labels = self.model.predict_batch(flat)
        if R == 1:
            return labels
        rank = {lab: i for i, lab in enumerate(self.model.classes)}
        out = []
        for i in range(len(data)):
            chunk = labels[i * R:(i + 1) * R]
            counts = {}
            for lab in chunk:
                counts[lab] = counts.get(lab, 0) + 1
            best = max(counts.values())
            out.append(min((lab for lab, n in counts.items() if n == best), key=rank.__getitem__))
        return out

    def model_bytes(self) -> int:
        return self.model.memory_footprint(4)


def make_learner(method: str, d: int, P: int = 16, k: int = 30, seed: int = 0):
    if method == "tilda":
        return TildaLearner(d, P, k, seed, augment=True)
    if method == "tilda-da":
        return TildaLearner(d, P, k, seed, augment=False)
    if method == "tilda-p":
        return TildaLearner(d, 1, k, seed, augment=True)
    if method == "tilda-ncm":
        return BaselineLearner(RandomPrototypeModel(d, k, seed), augment=True)
    if method == "ncm":
        return BaselineLearner(NcmModel(d))
    if method == "nn":
        return BaselineLearner(NnModel(d))
    raise UnknownMethodError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


# -- scenarios -------------------------------------------------------------

@dataclass
class ScenarioSpec:
    mode: str = "ci"
    method: str = "tilda"
    P: int = 16
    k: int = 30
    R: int | None = None
    parts: int = 10
    order_seed: int = 0
    seed: int = 0
    full_test: bool = False
    checkpoint: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise UsageError(f"unknown scenario {self.mode!r}; choose from {', '.join(MODES)}")
        if self.method not in METHODS:
            raise UnknownMethodError(
                f"unknown method {self.method!r}; choose from {', '.join(METHODS)}"
            )
        if self.parts < 1:
            raise UsageError(f"parts must be >= 1, got {self.parts}")
        if self.R is not None and self.R < 1:
            raise UsageError(f"R must be >= 1, got {self.R}")


@dataclass
class StageRow:
    stage: int
    classes: int
    examples: int
    accuracy: float
    bytes: int


@dataclass
class ScenarioReport:
    mode: str
    method: str
    rows: list = field(default_factory=list)

    @property
    def summary(self) -> StageRow | None:
        return self.rows[-1] if self.rows else None

    @classmethod
    def from_json(cls, data) -> "ScenarioReport":
        obj = json.loads(data)
        rows = [StageRow(**dict(zip(obj["columns"], r))) for r in obj["rows"]]
        return cls(mode=obj["mode"], method=obj["method"], rows=rows)


def accuracy(predicted, expected) -> float:
    """Fraction of exact matches, every example weighted equally."""
    expected = list(expected)
    if not expected:
        raise EmptySplitError("accuracy over an empty test set")
    predicted = list(predicted)
    return sum(p == e for p, e in zip(predicted, expected)) / len(expected)


def _prepare(spec: ScenarioSpec, train: Dataset, test: Dataset, learner):
    if len(train) == 0:
        raise EmptySplitError("training split is empty")
    if len(test) == 0:
        raise EmptySplitError("test split is empty")
    if train.dim != test.dim:
        raise DimensionMismatchError(f"train dim {train.dim} != test dim {test.dim}")
    if not set(train.labels) & set(test.labels):
        raise EmptySplitError("train and test share no class label")
    if spec.R is not None:
        train = Dataset(train.variants[:, :spec.R], train.labels)
        test = Dataset(test.variants[:, :spec.R], test.labels)
    if learner is None:
        learner = make_learner(spec.method, train.dim, spec.P, spec.k, spec.seed)
    return train, test, learner


def run_class_incremental(spec: ScenarioSpec, train: Dataset, test: Dataset, learner=None) -> ScenarioReport:
    """Learn classes one at a time (seeded order); one report row per class.

    Accuracy is measured on the test examples of the classes seen so far,
    or on the whole test set when ``spec.full_test`` is set.
    """
    train, test, learner = _prepare(spec, train, test, learner)
    order = train.class_order()
    perm = np.random.default_rng(spec.order_seed).permutation(len(order))
    order = [order[i] for i in perm]
    by_class = {lab: [] for lab in order}
    for i, lab in enumerate(train.labels):
        by_class[lab].append(i)
    test_labels = np.asarray(test.labels, dtype=object)

    report = ScenarioReport("ci", spec.method)
    seen = set()
    n_seen = 0
    for stage, lab in enumerate(order, start=1):
        for i in by_class[lab]:
            learner.learn(train.variants[i], train.labels[i])
        n_seen += len(by_class[lab])
        seen.add(lab)
        if spec.full_test:
            evaluate = test
        else:
            mask = np.fromiter((t in seen for t in test_labels), dtype=bool, count=len(test))
            if not mask.any():
                raise EmptySplitError(f"no test example for the classes seen so far ({lab!r})")
            evaluate = test.subset(np.nonzero(mask)[0])
        acc = accuracy(learner.predict(evaluate), evaluate.labels)
        report.rows.append(StageRow(stage, len(seen), n_seen, acc, learner.model_bytes()))
    return report


def stratified_parts(labels, parts: int, seed: int = 0) -> list[np.ndarray]:
    """Split example indices into ``parts`` slices with every class in each.

    Examples are grouped by class (shuffled within the class) and dealt out
    round-robin, so slice sizes differ by at most one overall and every
    class's share differs by at most one between slices.
    """
    rng = np.random.default_rng(seed)
    by_class = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    for lab, idx in by_class.items():
        if len(idx) < parts:
            raise StratificationError(
                f"class {lab!r} has {len(idx)} examples, fewer than {parts} parts"
            )
    sequence = np.concatenate([rng.permutation(idx) for idx in by_class.values()])
    slices = [sequence[p::parts] for p in range(parts)]
    return [rng.permutation(s) for s in slices]


def run_example_incremental(spec: ScenarioSpec, train: Dataset, test: Dataset, learner=None) -> ScenarioReport:
    """Learn ``spec.parts`` stratified slices in turn; accuracy on the full test set."""
    train, test, learner = _prepare(spec, train, test, learner)
    report = ScenarioReport("ei", spec.method)
    seen = set()
    n_seen = 0
    for stage, idx in enumerate(stratified_parts(train.labels, spec.parts, spec.order_seed), start=1):
        for i in idx:
            learner.learn(train.variants[i], train.labels[i])
            seen.add(train.labels[i])
        n_seen += len(idx)
        acc = accuracy(learner.predict(test), test.labels)
        report.rows.append(StageRow(stage, len(seen), n_seen, acc, learner.model_bytes()))
    return report


def run_one_shot(spec: ScenarioSpec, train: Dataset, test: Dataset, learner=None) -> ScenarioReport:
    """Stream single examples in a seeded shuffled order.

    Reports the final accuracy, plus a row every ``spec.checkpoint``
    examples when that is positive.
    """
    train, test, learner = _prepare(spec, train, test, learner)
    order = np.random.default_rng(spec.order_seed).permutation(len(train))
    report = ScenarioReport("oneshot", spec.method)
    seen = set()
    for n, i in enumerate(order, start=1):
        learner.learn(train.variants[i], train.labels[i])
        seen.add(train.labels[i])
        if n == len(order) or (spec.checkpoint and n % spec.checkpoint == 0):
            acc = accuracy(learner.predict(test), test.labels)
            report.rows.append(StageRow(len(report.rows) + 1, len(seen), n, acc, learner.model_bytes()))
    return report


def run_scenario(spec: ScenarioSpec, train: Dataset, test: Dataset, learner=None) -> ScenarioReport:
    runner = {
        "ci": run_class_incremental,
        "ei": run_example_incremental,
        "oneshot": run_one_shot,
    }[spec.mode]
    return runner(spec, train, test, learner)


# -- report rendering ------------------------------------------------------

def report_emit(report: ScenarioReport, format: str = "text") -> bytes:
    """Render a report as an aligned text table, CSV or JSON."""
    rows = [astuple_row(r) for r in report.rows]
    if format == "json":
        obj = {
            "mode": report.mode,
            "method": report.method,
            "columns": list(COLUMNS),
            "rows": [list(r) for r in rows],
            "summary": asdict(report.summary) if report.summary else None,
        }
        return (json.dumps(obj, indent=2) + "\n").encode("utf-8")
    if format == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for stage, classes, examples, acc, nbytes in rows:
            writer.writerow([stage, classes, examples, f"{acc:.6f}", nbytes])
        return buf.getvalue().encode("utf-8")
    if format == "text":
        lines = [f"{'stage':>6} {'classes':>8} {'examples':>9} {'accuracy':>9} {'bytes':>12}"]
        for stage, classes, examples, acc, nbytes in rows:
            lines.append(f"{stage:>6} {classes:>8} {examples:>9} {acc:>9.4f} {nbytes:>12}")
        if report.summary:
            s = report.summary
            lines.append(
                f"final [{report.mode}/{report.method}]: accuracy {s.accuracy:.4f} "
                f"after {s.examples} examples, {s.classes} classes, {s.bytes} bytes"
            )
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise UsageError(f"unknown report format {format!r}")


def astuple_row(row: StageRow) -> tuple:
    return (row.stage, row.classes, row.examples, row.accuracy, row.bytes)
