"""Command-line surface for the toxspan toolkit.

Commands:
    ingest         convert source datasets to the canonical JSONL format
    stats          per-split composition and span coverage of a dataset
    balance        top up splits with non-toxic pool samples to a 1:1 ratio
    build-lexicon  induce a scored lexicon from span-annotated training data
    predict        predict spans with a lexicon or a token-score file
    evaluate       score a span prediction file against gold annotations
    tune           grid-search one method's hyper-parameters on dev
    experiment     full tuned in-domain + cross-domain evaluation from a config
    sample-errors  draw a stratified annotation sheet of erroneous predictions
    prevalence     re-weighted error-class prevalence from an annotated sheet

Every command writes its outputs under ``--out`` only, never touching its
inputs, and drops a manifest (inputs with hashes, parameters, seed,
version) alongside the outputs. All randomness is controlled by
``--seed``, so a repeated invocation produces byte-identical files.
Relative input paths are also tried against the ``TOXSPAN_DATA``
directory when they do not exist as given.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    Dataset,
    SPLITS,
    balance_binary,
    compute_stats,
    ingest_hatexplain,
    ingest_semeval,
    merge_datasets,
    read_canonical,
    write_canonical,
)
from .errsample import (
    categorize,
    prevalence_by_method,
    read_sheet,
    sample_sheet,
    select_errors,
    write_prevalence_csv,
    write_sheet,
)
from .exceptions import ToxspanError
from .gating import gate, load_binary, load_span_predictions, write_span_predictions
from .harness import (
    ExperimentConfig,
    MethodKind,
    MethodSpec,
    Objective,
    Setting,
    format_result_table,
    grid_search,
    load_experiment,
    run_experiment,
    write_result_csv,
    write_trace_csv,
)
from .lexicon import (
    InSpanRule,
    LexiconBuildConfig,
    MatchKind,
    MatchMode,
    build_lexicon,
    load_wordlist,
    predict,
    save_lexicon,
)
from .metrics import evaluate
from .rationale import ThresholdConfig, load_scores, normalize, threshold_to_spans
from .spans import MergeConfig, merge_spans

log = logging.getLogger("toxspan")


def _resolve(path: str) -> Path:
    """Resolve an input path, falling back to the TOXSPAN_DATA root."""
    p = Path(path)
    if p.exists():
        return p
    root = os.environ.get("TOXSPAN_DATA")
    if root and not p.is_absolute():
        candidate = Path(root) / p
        if candidate.exists():
            return candidate
    return p


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    manifest_path: Path,
    command: str,
    args: argparse.Namespace,
    inputs: list[Path],
    outputs: list[Path],
) -> None:
    # `out` is omitted: outputs are listed relative to the manifest, so two
    # runs of the same command into different directories stay byte-identical
    params = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("func", "out") and v is not None
    }
    base = manifest_path.parent
    def relative(p: Path) -> str:
        try:
            return str(p.relative_to(base))
        except ValueError:
            return p.name
    manifest = {
        "command": command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "parameters": params,
        "inputs": {str(p): _sha256(p) for p in inputs if p.exists()},
        "outputs": sorted(relative(p) for p in outputs),
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest_for(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else Path(str(out) + ".manifest.json")


def _load_dataset(path: str, split: str | None = None) -> Dataset:
    dataset = read_canonical(_resolve(path))
    if split and split != "all":
        dataset = dataset.subset(split)
    return dataset


def _match_mode(args: argparse.Namespace) -> MatchMode:
    return MatchMode(mode=MatchKind(args.match_mode), case_fold=not args.no_case_fold)


def cmd_ingest(args: argparse.Namespace) -> int:
    ingest = ingest_semeval if args.format == "semeval" else ingest_hatexplain
    parts = []
    inputs = []
    for split in SPLITS:
        source = getattr(args, split)
        if source is None:
            continue
        path = _resolve(source)
        inputs.append(path)
        parts.append(ingest(path, split))
    if not parts:
        raise ToxspanError("nothing to ingest: pass at least one of --train/--dev/--test")
    name = args.name or parts[0].name
    dataset = merge_datasets(parts, name=name) if len(parts) > 1 else parts[0]
    dataset.name = name
    out = Path(args.out)
    write_canonical(dataset, out)
    _write_manifest(_manifest_for(out), "ingest", args, inputs, [out])
    print(f"wrote {len(dataset.samples)} samples to {out}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    path = _resolve(args.dataset)
    dataset = read_canonical(path)
    stats = compute_stats(dataset)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["split", "toxic_with_span", "toxic_without_span", "nontoxic", "span_pct"])
        for split, frac in stats.splits.items():
            writer.writerow(
                [split, f"{frac.toxic_with_span:.6f}", f"{frac.toxic_without_span:.6f}", f"{frac.nontoxic:.6f}", ""]
            )
        writer.writerow(["all", "", "", "", f"{stats.span_pct:.6f}"])
    _write_manifest(_manifest_for(out), "stats", args, [path], [out])
    for split, frac in stats.splits.items():
        print(
            f"{split:6s}  toxic+span {100 * frac.toxic_with_span:5.1f}%   "
            f"toxic-no-span {100 * frac.toxic_without_span:5.1f}%   "
            f"non-toxic {100 * frac.nontoxic:5.1f}%"
        )
    print(f"span coverage: {100 * stats.span_pct:.1f}% of characters on average")
    return 0


def cmd_balance(args: argparse.Namespace) -> int:
    dataset_path = _resolve(args.dataset)
    pool_path = _resolve(args.pool)
    balanced = balance_binary(read_canonical(dataset_path), read_canonical(pool_path), args.seed)
    out = Path(args.out)
    write_canonical(balanced, out)
    _write_manifest(_manifest_for(out), "balance", args, [dataset_path, pool_path], [out])
    print(f"wrote {len(balanced.samples)} samples to {out}")
    return 0


def cmd_build_lexicon(args: argparse.Namespace) -> int:
    path = _resolve(args.dataset)
    dataset = _load_dataset(args.dataset, args.split)
    cfg = LexiconBuildConfig(
        theta=args.theta, min_occ=args.min_occ, in_span_rule=InSpanRule(args.in_span_rule)
    )
    lex = build_lexicon(dataset, cfg)
    out = Path(args.out)
    save_lexicon(lex, out)
    _write_manifest(_manifest_for(out), "build-lexicon", args, [path], [out])
    print(f"wrote {len(lex)} entries to {out}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    if bool(args.lexicon) == bool(args.scores):
        raise ToxspanError("pass exactly one of --lexicon or --scores")
    dataset_path = _resolve(args.dataset)
    full_dataset = read_canonical(dataset_path)
    dataset = full_dataset if args.split == "all" else full_dataset.subset(args.split)
    inputs = [dataset_path]
    merge_cfg = MergeConfig(args.fill_chars)
    if args.lexicon:
        lexicon_path = _resolve(args.lexicon)
        inputs.append(lexicon_path)
        lex = load_wordlist(lexicon_path)
        mode = _match_mode(args)
        preds = {s.id: predict(s.text, lex, mode) for s in dataset.samples}
    else:
        scores_path = _resolve(args.scores)
        inputs.append(scores_path)
        if args.tau is None:
            raise ToxspanError("--scores prediction needs --tau")
        scores = load_scores(scores_path, dataset=full_dataset)
        cfg = ThresholdConfig(args.tau)
        preds = {
            s.id: threshold_to_spans(normalize(scores[s.id]), cfg)
            for s in dataset.samples
            if s.id in scores
        }
    preds = {sid: merge_spans(sp, merge_cfg) for sid, sp in preds.items()}
    out = Path(args.out)
    write_span_predictions(preds, out)
    _write_manifest(_manifest_for(out), "predict", args, inputs, [out])
    print(f"wrote predictions for {len(preds)} samples to {out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    dataset_path = _resolve(args.dataset)
    pred_path = _resolve(args.pred)
    dataset = _load_dataset(args.dataset, args.split)
    preds = load_span_predictions(pred_path, dataset=dataset if args.split == "all" else None)
    preds = {sid: sp for sid, sp in preds.items() if sid in {s.id for s in dataset.samples}}
    inputs = [dataset_path, pred_path]
    if args.setting == Setting.INFERRED.value:
        if not args.binary:
            raise ToxspanError("the inferred setting needs --binary predictions")
        binary_path = _resolve(args.binary)
        inputs.append(binary_path)
        preds = gate(preds, load_binary(binary_path))
    report = evaluate(dataset, preds)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("dataset", "split", "setting") + report.COLUMNS)
        row = report.to_row()
        writer.writerow(
            [dataset.name, args.split, args.setting]
            + [("" if row[c] is None else f"{row[c]:.6f}" if isinstance(row[c], float) else row[c]) for c in report.COLUMNS]
        )
    _write_manifest(_manifest_for(out), "evaluate", args, inputs, [out])
    for name in ("toxic_f1p", "nontoxic_f1p", "macro_f1p"):
        value = getattr(report, name)
        print(f"{name}: {'-' if value is None else f'{100 * value:.1f}'}")
    return 0


def _method_from_args(args: argparse.Namespace, train_name: str) -> MethodSpec:
    given = [flag for flag in ("lexicon", "scores", "pred") if getattr(args, flag, None)]
    if len(given) > 1:
        raise ToxspanError("pass at most one of --lexicon, --scores, --pred")
    if args.lexicon:
        return MethodSpec(
            name=args.method or Path(args.lexicon).stem,
            kind=MethodKind.WORDLIST_LEXICON,
            lexicon_path=_resolve(args.lexicon),
            match_mode=_match_mode(args),
        )
    if args.scores:
        return MethodSpec(
            name=args.method or "rationale",
            kind=MethodKind.RATIONALE_FILE,
            score_files={train_name: _resolve(args.scores)},
        )
    if args.pred:
        return MethodSpec(
            name=args.method or "spans",
            kind=MethodKind.SPAN_FILE,
            span_files={train_name: _resolve(args.pred)},
        )
    return MethodSpec(
        name=args.method or "constructed",
        kind=MethodKind.CONSTRUCTED_LEXICON,
        match_mode=_match_mode(args),
        in_span_rule=InSpanRule(args.in_span_rule),
    )


def cmd_tune(args: argparse.Namespace) -> int:
    dataset_path = _resolve(args.dataset)
    dataset = read_canonical(dataset_path)
    method = _method_from_args(args, dataset.name)
    inputs = [dataset_path]
    binary = {}
    if args.setting == Setting.INFERRED.value:
        if not args.binary:
            raise ToxspanError("the inferred setting needs --binary predictions")
        binary_path = _resolve(args.binary)
        inputs.append(binary_path)
        binary = {dataset.name: load_binary(binary_path)}
    cfg = ExperimentConfig(
        train_name=dataset.name,
        datasets={dataset.name: dataset},
        setting=Setting(args.setting),
        objective=Objective(args.objective) if args.objective else None,
        binary=binary,
        seed=args.seed,
        jobs=args.jobs,
    )
    tuned = grid_search(method, dataset, dataset.subset("dev"), cfg.grid, cfg)
    out = Path(args.out)
    write_trace_csv(tuned, out)
    _write_manifest(_manifest_for(out), "tune", args, inputs, [out])
    chosen = {
        "method": tuned.method,
        "objective": tuned.objective.value,
        "objective_value": tuned.objective_value,
        "fill_chars": tuned.point.fill_chars,
        "theta": tuned.point.theta,
        "min_occ": tuned.point.min_occ,
        "tau": tuned.point.tau,
    }
    print(json.dumps({k: v for k, v in chosen.items() if v is not None}, sort_keys=True))
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    config_path = _resolve(args.config)
    cfg, methods = load_experiment(config_path)
    if args.jobs:
        cfg.jobs = args.jobs
    result = run_experiment(cfg, methods)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / "results.csv", out / "results.txt"]
    write_result_csv(result.rows, out / "results.csv")
    table = format_result_table(result.rows)
    (out / "results.txt").write_text(table, encoding="utf-8")
    for name, tuned in result.tuned.items():
        trace_path = out / f"trace_{name}.csv"
        write_trace_csv(tuned, trace_path)
        outputs.append(trace_path)
    inputs = [config_path]
    _write_manifest(out / "manifest.json", "experiment", args, inputs, outputs)
    print(table, end="")
    return 0


def cmd_sample_errors(args: argparse.Namespace) -> int:
    dataset_path = _resolve(args.dataset)
    pred_path = _resolve(args.pred)
    dataset = _load_dataset(args.dataset, args.split)
    preds = load_span_predictions(pred_path)
    preds = {sid: sp for sid, sp in preds.items() if sid in {s.id for s in dataset.samples}}
    errors = select_errors(dataset, preds, method=args.method)
    categorized, _counts = categorize(errors)
    sheet = sample_sheet(categorized, per_category=args.per_category, seed=args.seed)
    out = Path(args.out)
    write_sheet(sheet, out)
    _write_manifest(_manifest_for(out), "sample-errors", args, [dataset_path, pred_path], [out])
    print(f"wrote {len(sheet.entries)} of {len(errors)} errors to {out}")
    return 0


def cmd_prevalence(args: argparse.Namespace) -> int:
    sheet_path = _resolve(args.sheet)
    sheet = read_sheet(sheet_path)
    prevalence = prevalence_by_method(sheet)
    out = Path(args.out)
    write_prevalence_csv(prevalence, out)
    _write_manifest(_manifest_for(out), "prevalence", args, [sheet_path], [out])
    print(f"wrote prevalence for {len(prevalence)} method(s) to {out}")
    return 0


def _add_common_predict_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--match-mode", choices=[k.value for k in MatchKind], default="substring")
    sub.add_argument("--no-case-fold", action="store_true", help="match case-sensitively")
    sub.add_argument(
        "--in-span-rule",
        choices=[r.value for r in InSpanRule],
        default="majority_chars",
        help="when a token occurrence counts as inside the gold spans",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toxspan", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"toxspan {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("ingest", help="convert source datasets to canonical JSONL")
    sub.add_argument("--format", choices=["semeval", "hatexplain"], required=True)
    sub.add_argument("--train", help="source file ingested as the train split")
    sub.add_argument("--dev", help="source file ingested as the dev split")
    sub.add_argument("--test", help="source file ingested as the test split")
    sub.add_argument("--name", help="dataset name stored in the output header")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_ingest)

    sub = commands.add_parser("stats", help="dataset composition and span coverage")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_stats)

    sub = commands.add_parser("balance", help="add pool samples until toxic:non-toxic is 1:1")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--pool", required=True, help="canonical JSONL of non-toxic samples")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_balance)

    sub = commands.add_parser("build-lexicon", help="induce a lexicon from gold spans")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--split", choices=list(SPLITS) + ["all"], default="train")
    sub.add_argument("--theta", type=float, default=0.0)
    sub.add_argument("--min-occ", type=int, default=1)
    sub.add_argument(
        "--in-span-rule", choices=[r.value for r in InSpanRule], default="majority_chars"
    )
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_build_lexicon)

    sub = commands.add_parser("predict", help="predict spans for every sample")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--split", choices=list(SPLITS) + ["all"], default="all")
    sub.add_argument("--lexicon", help="word list or induced lexicon file")
    sub.add_argument("--scores", help="per-token score file")
    sub.add_argument("--tau", type=float, help="score threshold (with --scores)")
    sub.add_argument("--fill-chars", type=int, default=0)
    sub.add_argument("--match-mode", choices=[k.value for k in MatchKind], default="substring")
    sub.add_argument("--no-case-fold", action="store_true")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_predict)

    sub = commands.add_parser("evaluate", help="score a prediction file")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--pred", required=True, help="span prediction JSONL")
    sub.add_argument("--split", choices=list(SPLITS) + ["all"], default="all")
    sub.add_argument("--setting", choices=[s.value for s in Setting], default="oracle")
    sub.add_argument("--binary", help="binary prediction JSONL (inferred setting)")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_evaluate)

    sub = commands.add_parser("tune", help="grid-search one method on the dev split")
    sub.add_argument("--dataset", required=True, help="canonical JSONL with train and dev splits")
    sub.add_argument("--method", help="method name used in outputs")
    sub.add_argument("--lexicon", help="tune a fixed word list")
    sub.add_argument("--scores", help="tune a per-token score file")
    sub.add_argument("--pred", help="tune an external span prediction file")
    _add_common_predict_flags(sub)
    sub.add_argument("--setting", choices=[s.value for s in Setting], default="oracle")
    sub.add_argument("--objective", choices=[o.value for o in Objective])
    sub.add_argument("--binary", help="binary prediction JSONL (inferred setting)")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--out", required=True, help="grid trace CSV")
    sub.set_defaults(func=cmd_tune)

    sub = commands.add_parser("experiment", help="run a full experiment from a config file")
    sub.add_argument("--config", required=True)
    sub.add_argument("--jobs", type=int, default=None)
    sub.add_argument("--out", required=True, help="output directory")
    sub.set_defaults(func=cmd_experiment)

    sub = commands.add_parser("sample-errors", help="draw an annotation sheet of errors")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--pred", required=True)
    sub.add_argument("--method", default="", help="method name recorded in the sheet")
    sub.add_argument("--split", choices=list(SPLITS) + ["all"], default="all")
    sub.add_argument("--per-category", type=int, default=15)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_sample_errors)

    sub = commands.add_parser("prevalence", help="re-weighted class prevalence per method")
    sub.add_argument("--sheet", required=True, help="annotated sheet CSV")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_prevalence)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ToxspanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
