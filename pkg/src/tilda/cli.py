"""Command line entry point: ``tilda train|predict|bench|augment|synth``.

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
Relative paths are resolved against ``$TILDA_DATA_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as tio
from .augment import ProjectionExtractor, generate_variants
from .errors import DataError, UsageError
from .harness import (
    METHODS,
    MODES,
    Dataset,
    ScenarioSpec,
    report_emit,
    run_scenario,
    synth_gaussian,
)
from .model import AnchorStore, ModelConfig

log = logging.getLogger("tilda")

EXIT_USAGE = 1
EXIT_DATA = 2

MODEL_METHODS = ("tilda", "tilda-da", "tilda-p")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pair(text: str) -> tuple[str, str | None]:
    parts = text.split(",")
    if len(parts) == 1:
        return parts[0], None
    if len(parts) == 2 and all(parts):
        return parts[0], parts[1]
    raise argparse.ArgumentTypeError(f"expected FEATURES[,LABELS], got {text!r}")


def _sniff(path: Path) -> str:
    if path.suffix.lower() == ".csv":
        return "csv"
    with open(path, "rb") as f:
        head = f.read(4)
    if head == tio.IMAGE_MAGIC:
        return "images"
    return "features"


def load_dataset(features, labels=None, extractor=None, csv_header=False) -> Dataset:
    """Build a dataset from a feature file, CSV file or image container."""
    fpath = tio.resolve_path(features)
    kind = _sniff(fpath)
    if kind == "csv":
        rows = tio.read_csv_features(fpath, header=csv_header)
        if not rows:
            return Dataset(np.zeros((0, 1, 0)), [])
        return Dataset.from_features(np.stack([r[0] for r in rows]), [r[1] for r in rows])
    if labels is None:
        raise UsageError(f"{features}: a label file is required")
    if kind == "images":
        images = tio.read_images(fpath)
        labs = tio.read_labels(tio.resolve_path(labels), expected_count=len(images))
        return Dataset.from_images(images, labs, extractor)
    X = tio.read_features(fpath)
    labs = tio.read_labels(tio.resolve_path(labels), expected_count=len(X))
    return Dataset.from_features(X, labs)


def _extractor(args) -> ProjectionExtractor:
    return ProjectionExtractor(dim=args.extract_dim, seed=args.extract_seed)


def cmd_train(args) -> int:
    if args.method not in MODEL_METHODS:
        raise UsageError(
            f"train saves anchor models only; --method must be one of {', '.join(MODEL_METHODS)}"
        )
    data = load_dataset(args.features, args.labels, _extractor(args), args.csv_header)
    if len(data) == 0:
        raise DataError("no training example")
    P = 1 if args.method == "tilda-p" else args.P
    store = AnchorStore(ModelConfig(P=P, k=args.k, d=data.dim, seed=args.seed))
    augment = args.method != "tilda-da"
    for variants, label in zip(data.variants, data.labels):
        if augment:
            store.learn_augmented(variants, label)
        else:
            store.learn_one(variants[0], label)
    tio.save_model(tio.resolve_path(args.model), store)
    log.info("learned %d examples (%d variants each) into %d classes",
             len(data), data.num_variants if augment else 1, store.num_classes)
    return 0


def cmd_predict(args) -> int:
    store = tio.load_model(tio.resolve_path(args.model))
    if args.labels or _sniff(tio.resolve_path(args.features)) == "csv":
        data = load_dataset(args.features, args.labels, _extractor(args), args.csv_header)
    else:
        data = _unlabelled(args)
    labels = []
    for variants in data.variants:
        pred = store.predict_augmented(variants) if not args.no_augment else store.predict_one(variants[0])
        labels.append(pred.label)
    out = sys.stdout
    if args.out == "json":
        out.write(json.dumps([{"index": i, "label": str(lab)} for i, lab in enumerate(labels)]) + "\n")
    elif args.out == "csv":
        out.write("index,label\n")
        for i, lab in enumerate(labels):
            out.write(f"{i},{lab}\n")
    else:
        for lab in labels:
            out.write(f"{lab}\n")
    if args.labels:
        correct = sum(str(p) == str(t) for p, t in zip(labels, data.labels))
        log.info("accuracy %.4f (%d/%d)", correct / max(len(labels), 1), correct, len(labels))
    return 0


def _unlabelled(args) -> Dataset:
    fpath = tio.resolve_path(args.features)
    if _sniff(fpath) == "images":
        images = tio.read_images(fpath)
        return Dataset.from_images(images, [None] * len(images), _extractor(args))
    X = tio.read_features(fpath)
    return Dataset.from_features(X, [None] * len(X))


def cmd_bench(args) -> int:
    spec = ScenarioSpec(
        mode=args.scenario, method=args.method, P=args.P, k=args.k, R=args.R,
        parts=args.parts, order_seed=args.order_seed, seed=args.seed,
        full_test=args.full_test, checkpoint=args.checkpoint,
    )
    extractor = _extractor(args)
    train = load_dataset(*args.train, extractor=extractor, csv_header=args.csv_header)
    test = load_dataset(*args.test, extractor=extractor, csv_header=args.csv_header)
    if spec.method in ("tilda", "tilda-p", "tilda-ncm") and train.num_variants == 1:
        log.info("feature inputs carry no augmented variants; %s runs without augmentation", spec.method)
    report = run_scenario(spec, train, test)
    payload = report_emit(report, args.report)
    if args.output:
        Path(tio.resolve_path(args.output)).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode("utf-8"))
    return 0


def cmd_augment(args) -> int:
    images = tio.read_images(tio.resolve_path(args.images))
    out = [v for img in images for v in generate_variants(img)]
    tio.write_images(tio.resolve_path(args.out), out)
    log.info("wrote %d variants of %d images", len(out), len(images))
    return 0


def cmd_synth(args) -> int:
    result = synth_gaussian(
        args.classes, args.dim, args.per_class, args.sep, args.seed,
        test_per_class=args.test_per_class,
    )
    train, test = result if args.test_per_class else (result, None)
    _write_pair(args.out, train)
    if test is not None:
        if args.test_out is None:
            raise UsageError("--test-per-class needs --test-out F,L")
        _write_pair(args.test_out, test)
    return 0


def _write_pair(pair, data: Dataset):
    features, labels = pair
    if labels is None:
        raise UsageError(f"output needs FEATURES,LABELS, got {features!r}")
    tio.write_features(tio.resolve_path(features), data.features)
    tio.write_labels(tio.resolve_path(labels), data.labels)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tilda", description="Incremental anchor-vector classifier")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_opts(p):
        p.add_argument("-P", type=int, default=16, help="number of subspaces")
        p.add_argument("-k", type=int, default=30, help="anchors per class and subspace")
        p.add_argument("--seed", type=int, default=0)

    def input_opts(p):
        p.add_argument("--csv-header", action="store_true", help="CSV inputs start with a header row")
        p.add_argument("--extract-dim", type=int, default=None,
                       help="random projection size for image inputs (default: raw pixels)")
        p.add_argument("--extract-seed", type=int, default=0)

    p = sub.add_parser("train", help="learn a feature file into a model file")
    p.add_argument("--features", required=True)
    p.add_argument("--labels")
    p.add_argument("--model", required=True)
    p.add_argument("--method", default="tilda", choices=METHODS)
    model_opts(p)
    input_opts(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify a feature file with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", help="optional ground truth; logs accuracy")
    p.add_argument("--out", default="text", choices=("text", "csv", "json"))
    p.add_argument("--no-augment", action="store_true", help="use only the original variant")
    input_opts(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="replay an incremental scenario")
    p.add_argument("--scenario", required=True, choices=MODES)
    p.add_argument("--method", default="tilda", choices=METHODS)
    p.add_argument("--train", required=True, type=_pair, metavar="F,L")
    p.add_argument("--test", required=True, type=_pair, metavar="F,L")
    p.add_argument("--parts", type=int, default=10)
    p.add_argument("-R", type=int, default=None, help="use only the first R variants")
    p.add_argument("--order-seed", type=int, default=0)
    p.add_argument("--full-test", action="store_true", help="CI accuracy over the whole test set")
    p.add_argument("--checkpoint", type=int, default=0, help="one-shot report interval")
    p.add_argument("--report", default="text", choices=("text", "csv", "json"))
    p.add_argument("--output", help="write the report here instead of stdout")
    model_opts(p)
    input_opts(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("augment", help="expand an image container into 10 variants per image")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("synth", help="write a Gaussian-cluster dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--sep", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=_pair, metavar="F,L")
    p.add_argument("--test-per-class", type=int, default=0)
    p.add_argument("--test-out", type=_pair, metavar="F,L")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tilda: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, UnicodeDecodeError) as exc:
        print(f"tilda: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
