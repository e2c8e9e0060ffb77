"""Command-line entry point.

Subcommands: extract, train, score, eval, variance, synth. Machine-readable
results go to stdout, diagnostics to stderr. Exit codes: 0 success, 1 usage
error (including bad flag values), 2 data or model error. Output files are
written atomically, so an interrupted run never leaves partial artifacts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import CorpusSpec, generate_corpus
from .errors import (
    InvalidComponentCountError,
    InvalidConfigError,
    InvalidFractionError,
    PdfSiftError,
)
from .features import extract_features
from .ioutil import atomic_write_text
from .metrics import confusion, rates, threshold_sweep
from .mlp import TrainConfig
from .pca import PrincipalComponents
from .pdfparse import parse_document
from .pipeline import load_bundle, save_bundle, score_file, score_matrix, train_pipeline
from .preprocess import FeatureMatrix, FeatureScaler, read_feature_csv, write_feature_csv

_USAGE_ERRORS = (InvalidComponentCountError, InvalidFractionError, InvalidConfigError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pdfsift", description="PDF malware triage pipeline")
    parser.add_argument("--version", action="version", version=f"pdfsift {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract feature rows from PDFs")
    p.add_argument("--input", required=True, help="PDF file or directory (recursed)")
    p.add_argument("--label", required=True, help="0, 1, or from-manifest")
    p.add_argument("--out", required=True, help="output feature CSV")

    p = sub.add_parser("train", help="train a model bundle from a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--components", default="48", help="P or auto:<ratio>")
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--dropout", type=float, default=0.15)
    p.add_argument("--val-frac", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output model bundle")
    p.add_argument("--history", default=None, help="optional training-history CSV")

    p = sub.add_parser("score", help="score one PDF with a trained bundle")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("eval", help="evaluate a bundle on a labeled feature CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--sweep", default=None, help="optional threshold-sweep CSV")

    p = sub.add_parser("variance", help="cumulative explained variance per component count")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--benign", type=int, required=True)
    p.add_argument("--malicious", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _iter_input_files(root: Path) -> list[tuple[str, Path]]:
    if root.is_file():
        return [(root.name, root)]
    files = [p for p in root.rglob("*") if p.is_file() and p.suffix.lower() == ".pdf"]
    entries = [(p.relative_to(root).as_posix(), p) for p in files]
    entries.sort(key=lambda item: item[0])
    return entries


def _manifest_labels(directory: Path) -> dict[str, int]:
    manifest = directory / "manifest.csv"
    labels: dict[str, int] = {}
    with open(manifest, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["path", "label"]:
            raise PdfSiftError(f"malformed manifest header in {manifest}")
        for row in reader:
            if len(row) != 2 or row[1] not in ("0", "1"):
                raise PdfSiftError(f"malformed manifest row in {manifest}: {row!r}")
            labels[row[0]] = int(row[1])
    return labels


def _cmd_extract(args) -> int:
    root = Path(args.input)
    if not root.exists():
        raise FileNotFoundError(f"input not found: {root}")
    entries = _iter_input_files(root)
    if args.label == "from-manifest":
        base = root if root.is_dir() else root.parent
        labels = _manifest_labels(base)
        missing = [rel for rel, _ in entries if rel not in labels]
        if missing:
            raise PdfSiftError(f"{len(missing)} file(s) absent from manifest, e.g. {missing[0]}")
    elif args.label in ("0", "1"):
        labels = {rel: int(args.label) for rel, _ in entries}
    else:
        raise _UsageError("--label must be 0, 1, or from-manifest")
    rows = []
    y = []
    paths = []
    for rel, path in entries:
        data = path.read_bytes()
        doc = parse_document(data)
        rows.append(extract_features(doc, data).values)
        y.append(labels[rel])
        paths.append(rel)
    matrix = FeatureMatrix(
        np.array(rows) if rows else np.empty((0, 48)), np.array(y, dtype=np.int64), paths
    )
    write_feature_csv(matrix, args.out)
    print(args.out)
    return 0


def _cmd_train(args) -> int:
    matrix = read_feature_csv(args.features)
    components: int | str
    text = args.components.strip().lower()
    if text.startswith("auto"):
        components = text
    else:
        try:
            components = int(text)
        except ValueError:
            raise _UsageError(f"--components must be an integer or auto:<ratio>, got {args.components!r}")
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        dropout_rate=args.dropout,
        validation_fraction=args.val_frac,
        seed=args.seed,
    )
    bundle, history = train_pipeline(matrix, components, config)
    save_bundle(bundle, args.out)
    if args.history:
        history.write_csv(args.history)
    print(args.out)
    return 0


def _cmd_score(args) -> int:
    bundle = load_bundle(args.model)
    data = Path(args.input).read_bytes()
    result = score_file(bundle, data)
    if args.as_json:
        print(json.dumps({"probability": result.probability, "verdict": result.verdict}))
    else:
        print(f"{result.probability!r},{result.verdict}")
    return 0


def _cmd_eval(args) -> int:
    bundle = load_bundle(args.model)
    matrix = read_feature_csv(args.features)
    scores = score_matrix(bundle, matrix.X)
    counts = confusion(scores, matrix.y, args.threshold)
    tpr, fpr, accuracy = rates(counts)
    print(
        f"{counts.tp},{counts.fp},{counts.tn},{counts.fn},"
        f"{tpr!r},{fpr!r},{accuracy!r}"
    )
    if args.sweep:
        thresholds = [round(i / 100, 2) for i in range(101)]
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["threshold", "tpr", "fpr"])
        for t, sweep_tpr, sweep_fpr in threshold_sweep(scores, matrix.y, thresholds):
            writer.writerow([repr(float(t)), repr(float(sweep_tpr)), repr(float(sweep_fpr))])
        atomic_write_text(args.sweep, buffer.getvalue())
    return 0


def _cmd_variance(args) -> int:
    matrix = read_feature_csv(args.features)
    scaler = FeatureScaler().fit(matrix.X)
    pca = PrincipalComponents().fit(scaler.transform(matrix.X))
    curve = pca.explained_variance_curve()
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["P", "R_cev"])
    for p, ratio in enumerate(curve, start=1):
        writer.writerow([p, repr(float(ratio))])
    atomic_write_text(args.out, buffer.getvalue())
    print(args.out)
    return 0


def _cmd_synth(args) -> int:
    spec = CorpusSpec(
        n_benign=args.benign,
        n_malicious=args.malicious,
        seed=args.seed,
        trait_overlap=args.overlap,
    )
    generate_corpus(spec, args.out)
    print(str(Path(args.out) / "manifest.csv"))
    return 0


_HANDLERS = {
    "extract": _cmd_extract,
    "train": _cmd_train,
    "score": _cmd_score,
    "eval": _cmd_eval,
    "variance": _cmd_variance,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        print(parser.format_usage(), end="", file=sys.stderr)
        return 1
    try:
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    except PdfSiftError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"IO_ERROR: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
