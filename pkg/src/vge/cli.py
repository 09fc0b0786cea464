"""Command-line front end.

Commands: score, decompose, compare, gradcheck, axioms, bench, ood,
demo-train. Exit codes: 0 on success, 1 when an assertion or trend check
fails, 2 on input errors. ``VGE_THREADS`` caps how many worker threads a
command may use when scoring samples; results are identical for any value
because every sample is scored independently.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import backend
from .axioms import K_LABELS, run_axiom_suite
from .bench import epkl_scaling, run_bench
from .dataio import (
    DECOMPOSE_FIELDS,
    REPORT_FIELDS,
    fmt_float,
    read_predictions,
    write_curve_csv,
    write_reports_csv,
    write_reports_jsonl,
)
from .errors import DegenerateVariance, VgeError
from .gate import GateParams
from .metrics import (
    accuracy_f1,
    aucc,
    aucc_curve,
    diversity,
    ece,
    kendall,
    roc_auc_fpr95,
    roc_curve,
    spearman,
)
from .traindemo import TrainConfig, train_toy_ensemble
from .uncertainty import score_batch
from .vgn import cross_entropy_on_mixture, finite_diff_gradcheck

COMPARE_SCORES = ("vgmu", "eu", "epkl", "epjs")


def _threads() -> int:
    raw = os.environ.get("VGE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise VgeError(f"VGE_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def parse_k_spec(spec: str, n_classes: int) -> GateParams | None:
    """Parse --k: a scalar, a per-class comma list, 'disabled', or a JSON
    file of learned per-class values (as written by demo-train --k-out)."""
    text = spec.strip()
    if text.lower() == "disabled":
        return None
    if os.path.isfile(text):
        try:
            with open(text, "r", encoding="utf-8") as fh:
                values = [float(x) for x in json.load(fh)]
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise VgeError(f"--k file {text!r} must hold a JSON list of numbers: {exc}") from None
    else:
        try:
            values = [float(x) for x in text.split(",")]
        except ValueError:
            raise VgeError(
                f"--k must be a number, a comma list, 'disabled', or a file; got {spec!r}"
            ) from None
    if len(values) == 1:
        return GateParams.from_k(values[0], n_classes)
    if len(values) != n_classes:
        raise VgeError(f"--k lists {len(values)} classes, input has {n_classes}")
    return GateParams.from_k(np.asarray(values), n_classes)


def _score_file(args) -> list:
    pred = read_predictions(args.input)
    arr = pred.batch.data
    params = parse_k_spec("disabled" if args.k_disabled else args.k, pred.batch.n_classes)
    kwargs = dict(
        normalize=args.normalize,
        conf_threshold=args.conf_threshold,
        spread_threshold=args.spread_threshold,
    )
    n = _threads()
    if n == 1 or arr.shape[0] < 2 * n:
        return score_batch(arr, params, ids=pred.ids, **kwargs)
    chunks = np.array_split(np.arange(arr.shape[0]), n)
    with ThreadPoolExecutor(max_workers=n) as pool:
        futures = [
            pool.submit(
                score_batch,
                np.ascontiguousarray(arr[idx]),
                params,
                ids=[pred.ids[i] for i in idx],
                **kwargs,
            )
            for idx in chunks
        ]
        out = []
        for fut in futures:
            out.extend(fut.result())
    return out


def _emit_reports(args, reports, fields) -> None:
    writer = write_reports_csv if args.format == "csv" else write_reports_jsonl
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            writer(reports, fh, fields)
    else:
        writer(reports, sys.stdout, fields)


def cmd_score(args) -> int:
    _emit_reports(args, _score_file(args), REPORT_FIELDS)
    return 0


def cmd_decompose(args) -> int:
    _emit_reports(args, _score_file(args), DECOMPOSE_FIELDS)
    return 0


def cmd_compare(args) -> int:
    pred = read_predictions(args.input)
    if pred.batch.n_samples < 2:
        raise VgeError("compare needs at least two samples")
    selected = tuple(s.strip() for s in args.scores.split(",") if s.strip())
    unknown = [s for s in selected if s not in COMPARE_SCORES]
    if unknown or len(selected) < 2:
        raise VgeError(
            f"--scores must pick >= 2 of {', '.join(COMPARE_SCORES)}; got {args.scores!r}"
        )
    reports = score_batch(pred.batch.data, None, ids=pred.ids, normalize=args.normalize)
    scores = {name: np.array([getattr(r, name) for r in reports]) for name in selected}

    def matrix(fn):
        out = {}
        for a in selected:
            row = {}
            for b in selected:
                try:
                    row[b] = fmt_float(fn(scores[a], scores[b]))
                except DegenerateVariance:
                    row[b] = None
            out[a] = row
        return out

    concentration = {}
    curves = {}
    for name, vals in scores.items():
        clipped = np.clip(vals, 0.0, None)
        if clipped.sum() == 0:
            concentration[name] = None
            continue
        concentration[name] = fmt_float(aucc(clipped))
        curves[name] = aucc_curve(clipped)

    payload = {
        "samples": pred.batch.n_samples,
        "scores": list(selected),
        "spearman": matrix(spearman),
        "kendall": matrix(kendall),
        "aucc": concentration,
        "diversity": fmt_float(diversity(pred.batch)),
    }
    if all(label is not None for label in pred.labels):
        mixtures = pred.batch.data.mean(axis=1)
        predicted = np.argmax(mixtures, axis=1)
        labels = np.asarray(pred.labels, dtype=np.int64)
        acc, macro_f1 = accuracy_f1(predicted, labels, pred.batch.n_classes)
        confidence = mixtures[np.arange(len(predicted)), predicted]
        payload["predictive"] = {
            "accuracy": fmt_float(acc),
            "macro_f1": fmt_float(macro_f1),
            "ece": fmt_float(ece(confidence, predicted == labels, bins=args.bins)),
        }
    if args.output:
        prefix = Path(args.output)
        with open(prefix.with_suffix(".json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        for name, (xs, ys) in curves.items():
            with open(f"{prefix}_aucc_{name}.csv", "w", encoding="utf-8") as fh:
                write_curve_csv(fh, ("fraction", "cumulative_mass"), xs, ys)
    else:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    arr = rng.dirichlet(np.full(args.classes, 3.0), size=(args.batch, args.members))
    labels = rng.integers(0, args.classes, size=args.batch)
    params = GateParams(rng.uniform(-1.0, 1.5, args.classes))
    report = finite_diff_gradcheck(
        arr, params, cross_entropy_on_mixture(labels), h=args.step
    )
    print(f"max relative error (members): {report.max_rel_error_members:.3e}")
    print(f"max relative error (raw k):   {report.max_rel_error_raw:.3e}")
    print(f"tolerance: {args.tol:.1e} -> {'PASS' if report.max_rel_error <= args.tol else 'FAIL'}")
    return 0 if report.max_rel_error <= args.tol else 1


def cmd_axioms(args) -> int:
    result = run_axiom_suite()
    header = f"{'case':<5} {'ens':<4} {'k':<9} {'tu':>8} {'au':>8} {'eu':>8} {'vgmu':>8}"
    print(header)
    print("-" * len(header))
    for r in result.rows:
        print(
            f"{r.case:<5} {r.ensemble:<4} {r.k_label:<9} "
            f"{r.tu:8.4f} {r.au:8.4f} {r.eu:8.4f} {r.vgmu:8.4f}"
        )
    if args.output:
        import csv as _csv

        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh, lineterminator="\n")
            writer.writerow(["case", "ensemble", "k", "tu", "au", "eu", "vgmu"])
            for r in result.rows:
                writer.writerow(
                    [r.case, r.ensemble, r.k_label]
                    + [fmt_float(v) for v in (r.tu, r.au, r.eu, r.vgmu)]
                )
    if result.trend_failures:
        for failure in result.trend_failures:
            print(f"TREND FAILURE: {failure}", file=sys.stderr)
        return 1
    print(f"all trend assertions hold across k in {{{', '.join(K_LABELS)}}}")
    return 0


def cmd_bench(args) -> int:
    names = list(backend.AVAILABLE) if args.backend == "both" else [args.backend]
    if args.backend == "auto":
        names = [backend.ACTIVE]
    for name in names:
        res = run_bench(
            args.members, args.classes, samples=args.samples, reps=args.reps,
            seed=args.seed, backend_name=name,
        )
        print(
            f"[{name}] M={res.n_members} C={res.n_classes} "
            f"(median per-sample over {res.reps} reps of {res.samples} samples)"
        )
        print(f"  gated decomposition : {res.decompose_s * 1e6:10.3f} us")
        print(f"  moments -> vgmu     : {res.vgmu_s * 1e6:10.3f} us")
        print(f"  pairwise epkl       : {res.epkl_s * 1e6:10.3f} us")
        print(f"  epkl / vgmu         : {res.epkl_over_vgmu:10.1f}x")
        print(f"  epkl / decomposition: {res.epkl_over_decompose:10.1f}x")
    if args.scaling:
        ratio = epkl_scaling(
            args.members // 2, args.members, args.classes,
            samples=args.samples, reps=args.reps, seed=args.seed,
            backend_name=None if args.backend in ("auto", "both") else args.backend,
        )
        print(f"epkl time scaling M={args.members // 2} -> M={args.members}: {ratio:.2f}x")
    return 0


def cmd_ood(args) -> int:
    id_pred = read_predictions(args.id_input)
    ood_pred = read_predictions(args.ood_input)
    if id_pred.batch.n_classes != ood_pred.batch.n_classes:
        raise VgeError("id and ood files must share the class count")
    id_reports = score_batch(id_pred.batch.data, None, ids=id_pred.ids)
    ood_reports = score_batch(ood_pred.batch.data, None, ids=ood_pred.ids)
    payload = {}
    curves = {}
    for name in COMPARE_SCORES:
        id_scores = np.array([getattr(r, name) for r in id_reports])
        ood_scores = np.array([getattr(r, name) for r in ood_reports])
        auc, fpr95 = roc_auc_fpr95(id_scores, ood_scores)
        payload[name] = {"auc": fmt_float(auc), "fpr_at_95_tpr": fmt_float(fpr95)}
        curves[name] = roc_curve(id_scores, ood_scores)
    if args.output:
        prefix = Path(args.output)
        with open(prefix.with_suffix(".json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        for name, (fpr, tpr) in curves.items():
            with open(f"{prefix}_roc_{name}.csv", "w", encoding="utf-8") as fh:
                write_curve_csv(fh, ("fpr", "tpr"), fpr, tpr)
    else:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def cmd_demo_train(args) -> int:
    config = TrainConfig(
        n_members=args.members,
        n_classes=args.classes,
        n_features=args.features,
        samples_per_class=args.per_class,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        learn_k=not args.fixed_k,
    )
    members, params, history = train_toy_ensemble(config)
    del members
    print(f"epochs: {len(history.loss)}")
    print(f"final loss: {history.loss[-1]:.6g}")
    print(f"final accuracy: {history.accuracy[-1]:.4f}")
    k = params.k
    print(f"learned k: min={k.min():.4f} max={k.max():.4f}")
    if history.lr_halved_at is not None:
        print(f"learning rate halved at epoch {history.lr_halved_at}")
    if args.k_out:
        with open(args.k_out, "w", encoding="utf-8") as fh:
            json.dump([fmt_float(float(v)) for v in k], fh)
            fh.write("\n")
    if args.history_out:
        import csv as _csv

        with open(args.history_out, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["epoch", "loss", "accuracy"] + [f"k_{c}" for c in range(config.n_classes)]
            )
            for epoch, (loss, acc, kvec) in enumerate(
                zip(history.loss, history.accuracy, history.k)
            ):
                writer.writerow(
                    [epoch, fmt_float(loss), fmt_float(acc)] + [fmt_float(v) for v in kvec]
                )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vge",
        description="Variance-gated ensemble uncertainty scoring and evaluation",
    )
    parser.add_argument(
        "--backend-info", action="store_true", help="print the active kernel backend and exit"
    )
    sub = parser.add_subparsers(dest="command")

    def add_scoring(p):
        p.add_argument("--input", required=True, help="JSONL or CSV prediction file")
        p.add_argument("--output", help="output path (default: stdout)")
        p.add_argument(
            "--k",
            default="1.0",
            help="gate sensitivity: scalar, per-class comma list, or 'disabled'",
        )
        p.add_argument(
            "--k-disabled", action="store_true", help="shorthand for --k disabled"
        )
        p.add_argument("--normalize", action="store_true", help="entropies divided by log C")
        p.add_argument("--conf-threshold", type=float, default=0.5)
        p.add_argument("--spread-threshold", type=float, default=0.1)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("score", help="per-sample uncertainty report")
    add_scoring(p)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("decompose", help="score, reporting the entropy decomposition only")
    add_scoring(p)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("compare", help="rank agreement and concentration across scores")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="output prefix for the JSON report and CSV curves")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--bins", type=int, default=15, help="calibration bins for ECE")
    p.add_argument(
        "--scores",
        default=",".join(COMPARE_SCORES),
        help="comma list of scores to correlate (subset of vgmu,eu,epkl,epjs)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("gradcheck", help="finite-difference check of the backward pass")
    p.add_argument("--batch", type=int, default=2)
    p.add_argument("--members", type=int, default=3)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("axioms", help="run the axiom ensemble suite")
    p.add_argument("--output", help="optional CSV path for the result table")
    p.set_defaults(fn=cmd_axioms)

    p = sub.add_parser("bench", help="time the scoring kernels")
    p.add_argument("--members", type=int, default=100)
    p.add_argument("--classes", type=int, default=100)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--backend", choices=("auto", "python", "compiled", "both"), default="auto"
    )
    p.add_argument(
        "--scaling", action="store_true", help="also time EPKL at half the member count"
    )
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("ood", help="OOD detection metrics for every score")
    p.add_argument("--id-input", required=True)
    p.add_argument("--ood-input", required=True)
    p.add_argument("--output", help="output prefix for the JSON report and ROC curves")
    p.set_defaults(fn=cmd_ood)

    p = sub.add_parser("demo-train", help="train the toy gated ensemble end to end")
    p.add_argument("--members", type=int, default=5)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--features", type=int, default=2)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixed-k", action="store_true", help="keep k at its initialization")
    p.add_argument("--history-out", help="CSV path for per-epoch loss/accuracy/k")
    p.add_argument("--k-out", help="JSON path for the learned per-class k (feed back via --k)")
    p.set_defaults(fn=cmd_demo_train)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend_info:
        print(f"active backend: {backend.ACTIVE} (available: {', '.join(backend.AVAILABLE)})")
        return 0
    if not getattr(args, "command", None):
        parser.print_help()
        return 2
    try:
        return args.fn(args)
    except VgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    try:
        sys.exit(main())
    except BrokenPipeError:
        # downstream consumer (e.g. head) closed the pipe; not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        sys.exit(0)


if __name__ == "__main__":
    entrypoint()
