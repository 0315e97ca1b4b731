"""Command-line entry point wiring the whole pipeline.

Subcommands: synth, rais, train, eval, predict, report. Every run prints
its resolved configuration (including defaulted values and seeds) to
stderr so published results are replayable. Exit codes: 0 success,
1 usage error, 2 data/schema error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import data as data_mod
from . import evaluate, figures, nn, rais, train as train_mod
from .linalg import ShapeError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class DataError(Exception):
    pass


class NumericError(Exception):
    pass


def _print_config(subcommand: str, args: argparse.Namespace) -> None:
    skip = {"func"}
    parts = [
        f"{k}={v!r}" for k, v in sorted(vars(args).items()) if k not in skip
    ]
    print(f"riskmlp {subcommand}: " + " ".join(parts), file=sys.stderr)


def _load_dataset(path: str) -> data_mod.Dataset:
    try:
        return data_mod.load_csv(path)
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except (data_mod.SchemaError, data_mod.RowParseError) as exc:
        raise DataError(str(exc)) from None


def cmd_synth(args) -> int:
    dataset = data_mod.synth_generate(
        seed=args.seed,
        success_mean=args.success_mean,
        failure_mean=args.failure_mean,
        sd=args.sd,
    )
    data_mod.save_csv(dataset, args.out)
    n_s, n_f = dataset.label_counts()
    print(f"wrote {len(dataset)} samples ({n_s} S / {n_f} F) to {args.out}",
          file=sys.stderr)
    return EXIT_OK


def _load_candidate_csv(path: str, schema: rais.RaisSchema) -> np.ndarray:
    """Candidate-variable CSV: header row of codes, one sample per row."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header != schema.codes:
            for i, (got, want) in enumerate(zip(header, schema.codes)):
                if got != want:
                    raise DataError(
                        f"{path}: header column {i + 1} is {got!r}, expected {want!r}"
                    )
            raise DataError(
                f"{path}: header has {len(header)} columns, schema expects "
                f"{len(schema.codes)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows)


def cmd_rais(args) -> int:
    schema = (
        rais.load_schema(args.schema) if args.schema else rais.DEFAULT_CANDIDATE_SCHEMA
    )
    x = _load_candidate_csv(args.infile, schema)
    try:
        z, _, _ = rais.standardize(x)
        result = rais.pca(z, kaiser_threshold=args.kaiser)
        retained, report = rais.select_variables(
            schema, result, communality_threshold=args.communality
        )
    except (rais.ParameterError, rais.DegenerateVariableError) as exc:
        raise DataError(str(exc)) from None
    doc = {
        "kaiser_threshold": args.kaiser,
        "communality_threshold": args.communality,
        "eigenvalues": result.eigenvalues.tolist(),
        "explained_variance_ratio": result.explained_variance_ratio.tolist(),
        "retained_component_count": result.retained_component_count,
        "selection": report,
        "retained_schema": [
            {"code": v.code, "label": v.label, "content": v.content}
            for v in retained.variables
        ],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    kept = sum(1 for r in report if r["kept"])
    print(f"retained {kept}/{len(report)} variables "
          f"({result.retained_component_count} components) -> {args.out}",
          file=sys.stderr)
    return EXIT_OK


def _parse_split(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise DataError(f"bad --split value {text!r}") from None
    if len(parts) != 3:
        raise DataError("--split needs three comma-separated ratios")
    return parts  # type: ignore[return-value]


def cmd_train(args) -> int:
    dataset = _load_dataset(args.data)
    ratios = _parse_split(args.split)
    config = train_mod.TrainConfig(
        algorithm=args.algo,
        learning_rate=args.alpha,
        mu0=args.mu0,
        max_epochs=args.max_epochs,
        max_validation_failures=args.max_fail,
        seed=args.seed,
        split_ratios=ratios,
        stratified=not args.no_stratify,
    )
    try:
        tr, val, te = train_mod.split_dataset(
            dataset, config.split_ratios, config.seed, config.stratified
        )
    except ValueError as exc:
        raise DataError(str(exc)) from None
    net = nn.init_network([args.inputs, args.hidden, 2], seed=config.seed)
    net.norm_params = train_mod.fit_normalization(tr.samples)
    if net.layer_sizes[0] != len(dataset.schema):
        raise DataError(
            f"network expects {net.layer_sizes[0]} features but dataset "
            f"provides {len(dataset.schema)}"
        )
    splits = tuple(train_mod.make_pairs(ds.samples, net) for ds in (tr, val, te))
    try:
        if config.algorithm == "gd":
            outcome = train_mod.train_gd(net, splits, config)
        else:
            outcome = train_mod.train_lm(net, splits, config)
    except train_mod.DivergenceError as exc:
        raise NumericError(str(exc)) from None
    if not outcome.records:
        raise NumericError(
            f"no accepted training step (stop reason: {outcome.stop_reason})"
        )
    extra = {
        "algorithm": config.algorithm,
        "stop_reason": outcome.stop_reason,
        "split": {
            "seed": config.seed,
            "ratios": list(config.split_ratios),
            "stratified": config.stratified,
        },
    }
    nn.save_model(outcome.best_network, args.model, extra=extra)
    train_mod.write_log(outcome.records, args.log)
    last = outcome.records[-1]
    print(
        f"stopped after epoch {last.epoch} ({outcome.stop_reason}); best "
        f"validation MSE "
        f"{outcome.records[outcome.best_validation_epoch - 1].validation_mse:.4f} "
        f"at epoch {outcome.best_validation_epoch}",
        file=sys.stderr,
    )
    return EXIT_OK


def _reconstruct_splits(doc: dict, dataset: data_mod.Dataset):
    split_cfg = doc.get("split")
    if not split_cfg:
        raise DataError("model file lacks split configuration; cannot re-split")
    return train_mod.split_dataset(
        dataset,
        tuple(split_cfg["ratios"]),
        split_cfg["seed"],
        split_cfg["stratified"],
    )


def cmd_eval(args) -> int:
    net, doc = nn.load_model(args.model)
    dataset = _load_dataset(args.data)
    if len(dataset.schema) != net.layer_sizes[0]:
        raise DataError(
            f"model expects {net.layer_sizes[0]} features but dataset "
            f"provides {len(dataset.schema)}"
        )
    tr, val, te = _reconstruct_splits(doc, dataset)
    report = evaluate.build_report(
        net,
        {"training": tr, "validation": val, "test": te},
        dataset,
        bins=args.bins,
    )
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    accs = {k: v["accuracy_percent"] for k, v in report["confusion"].items()}
    print(f"accuracies: {accs}", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    net, _ = nn.load_model(args.model)
    dataset = _load_dataset(args.infile)
    if len(dataset.schema) != net.layer_sizes[0]:
        raise DataError(
            f"model expects {net.layer_sizes[0]} features but dataset "
            f"provides {len(dataset.schema)}"
        )
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["firm", "period"]
            + dataset.schema.codes
            + [f"out_{c}" for c in net.class_order]
            + ["predicted"]
        )
        for s in dataset.samples:
            label, raw = evaluate.classify(net, s.features)
            writer.writerow(
                [s.firm_id, s.period]
                + [repr(float(v)) for v in s.features]
                + [repr(float(v)) for v in raw]
                + [label]
            )
    print(f"wrote {len(dataset)} predictions to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        report = json.load(fh)
    text = evaluate.render_text(report)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote text report to {args.out}", file=sys.stderr)
    if args.figures:
        records = train_mod.read_log(args.log) if args.log else None
        written = figures.render_all(report, args.figures, records)
        print(f"rendered figures: {', '.join(written)}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskmlp",
        description="Project-risk index construction and success/failure "
        "classification toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="generate the calibrated synthetic dataset")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--success-mean", type=float, default=data_mod.DEFAULT_SUCCESS_MEAN)
    p.add_argument("--failure-mean", type=float, default=data_mod.DEFAULT_FAILURE_MEAN)
    p.add_argument("--sd", type=float, default=data_mod.DEFAULT_FEATURE_SD)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("rais", help="PCA-based index construction")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--schema", default=None,
                   help="candidate schema JSON (default: shipped 20-variable set)")
    p.add_argument("--out", required=True, help="selection report JSON")
    p.add_argument("--kaiser", type=float, default=rais.DEFAULT_KAISER_THRESHOLD)
    p.add_argument("--communality", type=float,
                   default=rais.DEFAULT_COMMUNALITY_THRESHOLD)
    p.set_defaults(func=cmd_rais)

    p = sub.add_parser("train", help="train the classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--algo", choices=["gd", "lm"], default="lm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--log", required=True, help="output per-epoch CSV log")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--mu0", type=float, default=0.001)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--max-fail", type=int, default=6)
    p.add_argument("--split", default="0.70,0.15,0.15")
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--inputs", type=int, default=17)
    p.add_argument("--hidden", type=int, default=25)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--bins", type=int, default=evaluate.DEFAULT_HISTOGRAM_BINS)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify samples with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="render a report JSON to text and figures")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True, help="output text file")
    p.add_argument("--figures", default=None, help="directory for PNG figures")
    p.add_argument("--log", default=None,
                   help="training log CSV for the performance figure")
    p.set_defaults(func=cmd_report)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    _print_config(args.subcommand, args)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
