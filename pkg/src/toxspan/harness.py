"""Experiment harness: grid search on dev, in/cross-domain test evaluation.

The protocol: every hyper-parameter combination of a method is evaluated
on the training domain's dev split (building lexicons from its train
split where applicable); the best combination is then evaluated once on
the training domain's test split (in-domain) and on the test split of
every other configured domain (cross-domain). Cross-domain evaluation
never touches the other domains' train or dev splits.

Four method kinds are supported: lexicons constructed from the training
data, fixed word-list lexicons, span prediction from per-token score
files, and externally produced span prediction files. The harness adds no
arithmetic of its own; every score comes from :mod:`toxspan.metrics`.
"""

from __future__ import annotations

import csv
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence, TypeVar

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .corpus import Dataset, read_canonical
from .exceptions import ConfigError
from .gating import BinaryPrediction, gate, load_binary, load_span_predictions
from .lexicon import (
    InSpanRule,
    LexiconBuildConfig,
    Lexicon,
    MatchKind,
    MatchMode,
    WordStats,
    count_word_stats,
    lexicon_from_stats,
    load_wordlist,
    predict,
)
from .metrics import EvalReport, evaluate
from .rationale import ThresholdConfig, TokenScores, load_scores, normalize, threshold_to_spans
from .spans import MergeConfig, SpanSet, merge_spans

log = logging.getLogger("toxspan")

T = TypeVar("T")
U = TypeVar("U")

FILL_GRID = (0, 1, 9999)
THETA_GRID = tuple(round(0.05 * i, 2) for i in range(21))
MIN_OCC_GRID = (1, 3, 5, 7, 11)
TAU_GRID = tuple(round(-0.05 + 0.025 * i, 3) for i in range(23))


class Setting(Enum):
    ORACLE = "oracle"      # message-level toxicity treated as known; no gating
    INFERRED = "inferred"  # binary verdicts empty the spans of predicted-non-toxic texts


class Objective(Enum):
    TOXIC_F1P = "toxic"
    MACRO_F1P = "macro"


DEFAULT_OBJECTIVE = {Setting.ORACLE: Objective.TOXIC_F1P, Setting.INFERRED: Objective.MACRO_F1P}


class MethodKind(Enum):
    CONSTRUCTED_LEXICON = "constructed_lexicon"
    WORDLIST_LEXICON = "wordlist_lexicon"
    RATIONALE_FILE = "rationale_file"
    SPAN_FILE = "span_file"


@dataclass(frozen=True)
class GridSpec:
    """Hyper-parameter value grids; defaults cover the full search space."""

    fill_chars: tuple[int, ...] = FILL_GRID
    thetas: tuple[float, ...] = THETA_GRID
    min_occs: tuple[int, ...] = MIN_OCC_GRID
    taus: tuple[float, ...] = TAU_GRID


class GridPoint(NamedTuple):
    """One grid combination; fields not used by a method kind stay None."""

    fill_chars: int
    theta: float | None = None
    min_occ: int | None = None
    tau: float | None = None


def enumerate_grid(kind: MethodKind, grid: GridSpec) -> list[GridPoint]:
    """All grid points for a method kind, in canonical (tie-break) order.

    The order is ascending fill_chars, then ascending theta or tau, then
    ascending min_occ, so taking the first maximum of a scan implements
    the documented deterministic tie-break.
    """
    points: list[GridPoint] = []
    if kind is MethodKind.CONSTRUCTED_LEXICON:
        for fill in sorted(grid.fill_chars):
            for theta in sorted(grid.thetas):
                for min_occ in sorted(grid.min_occs):
                    points.append(GridPoint(fill, theta=theta, min_occ=min_occ))
    elif kind is MethodKind.RATIONALE_FILE:
        for fill in sorted(grid.fill_chars):
            for tau in sorted(grid.taus):
                points.append(GridPoint(fill, tau=tau))
    else:
        for fill in sorted(grid.fill_chars):
            points.append(GridPoint(fill))
    return points


@dataclass
class MethodSpec:
    """A span prediction method plus the inputs it needs.

    ``score_files`` and ``span_files`` map dataset names to prediction
    inputs, since file-based methods need one file per domain they are
    evaluated on.
    """

    name: str
    kind: MethodKind
    lexicon_path: Path | None = None
    score_files: dict[str, Path] = field(default_factory=dict)
    span_files: dict[str, Path] = field(default_factory=dict)
    match_mode: MatchMode = MatchMode()
    in_span_rule: InSpanRule = InSpanRule.MAJORITY_CHARS

    def __post_init__(self) -> None:
        if self.kind is MethodKind.WORDLIST_LEXICON and self.lexicon_path is None:
            raise ConfigError(f"method {self.name!r}: wordlist_lexicon needs a lexicon file")
        if self.kind is MethodKind.RATIONALE_FILE and not self.score_files:
            raise ConfigError(f"method {self.name!r}: rationale_file needs score files")
        if self.kind is MethodKind.SPAN_FILE and not self.span_files:
            raise ConfigError(f"method {self.name!r}: span_file needs span prediction files")


@dataclass
class ExperimentConfig:
    """Datasets, setting, objective, and binary sources for one experiment."""

    train_name: str
    datasets: dict[str, Dataset]
    setting: Setting = Setting.ORACLE
    objective: Objective | None = None
    binary: dict[str, dict[str, BinaryPrediction]] = field(default_factory=dict)
    grid: GridSpec = GridSpec()
    seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.train_name not in self.datasets:
            raise ConfigError(f"train dataset {self.train_name!r} is not among the datasets")
        if self.setting is Setting.INFERRED:
            missing = [name for name in self.datasets if name not in self.binary]
            if missing:
                raise ConfigError(
                    "the inferred setting needs binary predictions for every dataset; "
                    f"missing: {', '.join(missing)}"
                )

    def resolved_objective(self) -> Objective:
        return self.objective or DEFAULT_OBJECTIVE[self.setting]

    def eval_names(self) -> list[str]:
        """In-domain dataset first, then the others in configuration order."""
        return [self.train_name] + [n for n in self.datasets if n != self.train_name]


class TraceRow(NamedTuple):
    point: GridPoint
    objective_value: float
    report: EvalReport


@dataclass
class TunedParams:
    method: str
    point: GridPoint
    objective: Objective
    objective_value: float
    trace: list[TraceRow]


class MethodRunner:
    """Produces predictions for one method across grid points and datasets.

    Base predictions (everything except the span merge) are cached per
    (dataset, base parameters), so sweeping fill_chars does not repeat
    matching or thresholding work.
    """

    def __init__(self, method: MethodSpec, train: Dataset):
        self.method = method
        self._train = train
        self._stats: dict[str, WordStats] | None = None
        self._wordlist: Lexicon | None = None
        self._norm_scores: dict[str, dict[str, TokenScores]] = {}
        self._span_preds: dict[str, dict[str, SpanSet]] = {}
        self._base_cache: dict[tuple, dict[str, SpanSet]] = {}

    def _word_stats(self) -> dict[str, WordStats]:
        if self._stats is None:
            self._stats = count_word_stats(self._train.subset("train"), self.method.in_span_rule)
        return self._stats

    def _wordlist_lexicon(self) -> Lexicon:
        if self._wordlist is None:
            assert self.method.lexicon_path is not None
            self._wordlist = load_wordlist(self.method.lexicon_path, name=self.method.name)
        return self._wordlist

    def _scores_for(self, eval_name: str) -> dict[str, TokenScores]:
        if eval_name not in self._norm_scores:
            path = self.method.score_files.get(eval_name)
            if path is None:
                raise ConfigError(f"method {self.method.name!r}: no score file for dataset {eval_name!r}")
            raw = load_scores(path)
            self._norm_scores[eval_name] = {sid: normalize(ts) for sid, ts in raw.items()}
        return self._norm_scores[eval_name]

    def _spans_for(self, eval_name: str) -> dict[str, SpanSet]:
        if eval_name not in self._span_preds:
            path = self.method.span_files.get(eval_name)
            if path is None:
                raise ConfigError(f"method {self.method.name!r}: no span file for dataset {eval_name!r}")
            self._span_preds[eval_name] = load_span_predictions(path)
        return self._span_preds[eval_name]

    def _base_predictions(self, subset: Dataset, eval_name: str, point: GridPoint) -> dict[str, SpanSet]:
        kind = self.method.kind
        if kind is MethodKind.CONSTRUCTED_LEXICON:
            key = (eval_name, point.theta, point.min_occ)
        elif kind is MethodKind.RATIONALE_FILE:
            key = (eval_name, point.tau)
        else:
            key = (eval_name,)
        cached = self._base_cache.get(key)
        if cached is not None:
            return cached

        preds: dict[str, SpanSet]
        if kind is MethodKind.CONSTRUCTED_LEXICON:
            assert point.theta is not None and point.min_occ is not None
            cfg = LexiconBuildConfig(point.theta, point.min_occ, self.method.in_span_rule)
            lex = lexicon_from_stats(self._word_stats(), cfg, name=self.method.name)
            preds = {s.id: predict(s.text, lex, self.method.match_mode) for s in subset.samples}
        elif kind is MethodKind.WORDLIST_LEXICON:
            lex = self._wordlist_lexicon()
            preds = {s.id: predict(s.text, lex, self.method.match_mode) for s in subset.samples}
        elif kind is MethodKind.RATIONALE_FILE:
            assert point.tau is not None
            scores = self._scores_for(eval_name)
            cfg_t = ThresholdConfig(point.tau)
            preds = {
                s.id: threshold_to_spans(scores[s.id], cfg_t)
                for s in subset.samples
                if s.id in scores
            }
        else:
            spans = self._spans_for(eval_name)
            preds = {s.id: spans[s.id] for s in subset.samples if s.id in spans}
        self._base_cache[key] = preds
        return preds

    def predictions(self, subset: Dataset, eval_name: str, point: GridPoint) -> dict[str, SpanSet]:
        base = self._base_predictions(subset, eval_name, point)
        if point.fill_chars == 0:
            return base
        cfg = MergeConfig(point.fill_chars)
        return {sid: merge_spans(sp, cfg) for sid, sp in base.items()}


def _objective_value(report: EvalReport, objective: Objective, context: str) -> float:
    value = report.toxic_f1p if objective is Objective.TOXIC_F1P else report.macro_f1p
    if value is None:
        raise ConfigError(
            f"objective {objective.value!r} is undefined on {context}: the required sample "
            "subset is empty"
        )
    return value


def _map_ordered(fn: Callable[[T], U], items: Sequence[T], jobs: int) -> list[U]:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def grid_search(
    method: MethodSpec,
    train: Dataset,
    dev: Dataset,
    grid: GridSpec,
    cfg: ExperimentConfig,
) -> TunedParams:
    """Evaluate every grid point on the dev split and pick the best.

    The returned trace lists every point in canonical order. Ties on the
    objective resolve to the earliest point in that order (smallest
    fill_chars, then smallest theta or tau, then smallest min_occ).
    """
    if not dev.samples:
        raise ConfigError(f"dev split of {cfg.train_name!r} is empty; nothing to tune on")
    objective = cfg.resolved_objective()
    runner = MethodRunner(method, train)
    points = enumerate_grid(method.kind, grid)
    binary = cfg.binary.get(cfg.train_name) if cfg.setting is Setting.INFERRED else None

    def evaluate_point(point: GridPoint) -> tuple[TraceRow, bool]:
        preds = runner.predictions(dev, cfg.train_name, point)
        if binary is not None:
            preds = gate(preds, binary)
        report = evaluate(dev, preds)
        value = _objective_value(report, objective, f"dev split of {cfg.train_name!r}")
        return TraceRow(point, value, report), any(preds.values())

    evaluated = _map_ordered(evaluate_point, points, cfg.jobs)
    trace = [row for row, _ in evaluated]

    best = trace[0]
    for row in trace[1:]:
        if row.objective_value > best.objective_value:
            best = row
    if not any(nonempty for _, nonempty in evaluated):
        log.warning("method %r: every grid point predicted no spans on dev", method.name)
    return TunedParams(
        method=method.name,
        point=best.point,
        objective=objective,
        objective_value=best.objective_value,
        trace=trace,
    )


def retention(in_domain: float, cross_domain: float) -> float | None:
    """Cross-domain score relative to in-domain score; None when undefined."""
    if in_domain == 0:
        return None
    return cross_domain / in_domain


RESULT_COLUMNS = (
    "method",
    "kind",
    "train_domain",
    "eval_domain",
    "scope",
    "setting",
    "objective",
    "fill_chars",
    "theta",
    "min_occ",
    "tau",
    "dev_objective",
    "toxic_f1p",
    "toxic_precision",
    "toxic_recall",
    "nontoxic_f1p",
    "macro_f1p",
    "retention",
    "n_toxic",
    "n_nontoxic",
    "missing_predictions",
)

_METRIC_COLUMNS = ("toxic_f1p", "toxic_precision", "toxic_recall", "nontoxic_f1p", "macro_f1p")


@dataclass
class ExperimentResult:
    rows: list[dict[str, object]]
    tuned: dict[str, TunedParams]


def run_experiment(cfg: ExperimentConfig, methods: Sequence[MethodSpec]) -> ExperimentResult:
    """Tune each method in-domain, then evaluate in-domain and cross-domain."""
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ConfigError("method names must be unique within an experiment")
    train_dataset = cfg.datasets[cfg.train_name]
    dev = train_dataset.subset("dev")
    objective = cfg.resolved_objective()

    rows: list[dict[str, object]] = []
    tuned_by_method: dict[str, TunedParams] = {}
    for method in methods:
        tuned = grid_search(method, train_dataset, dev, cfg.grid, cfg)
        tuned_by_method[method.name] = tuned
        runner = MethodRunner(method, train_dataset)
        in_domain_value: float | None = None
        for eval_name in cfg.eval_names():
            subset = cfg.datasets[eval_name].subset("test")
            preds = runner.predictions(subset, eval_name, tuned.point)
            if cfg.setting is Setting.INFERRED:
                preds = gate(preds, cfg.binary[eval_name])
            report = evaluate(subset, preds)
            value = report.toxic_f1p if objective is Objective.TOXIC_F1P else report.macro_f1p
            in_domain = eval_name == cfg.train_name
            if in_domain:
                in_domain_value = value
            row: dict[str, object] = {
                "method": method.name,
                "kind": method.kind.value,
                "train_domain": cfg.train_name,
                "eval_domain": eval_name,
                "scope": "in_domain" if in_domain else "cross_domain",
                "setting": cfg.setting.value,
                "objective": objective.value,
                "fill_chars": tuned.point.fill_chars,
                "theta": tuned.point.theta,
                "min_occ": tuned.point.min_occ,
                "tau": tuned.point.tau,
                "dev_objective": tuned.objective_value,
                "retention": (
                    None
                    if in_domain or value is None or not in_domain_value
                    else retention(in_domain_value, value)
                ),
            }
            row.update(report.to_row())
            rows.append(row)
    return ExperimentResult(rows=rows, tuned=tuned_by_method)


def _fmt_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_result_csv(rows: Iterable[dict[str, object]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt_cell(row.get(col)) for col in RESULT_COLUMNS])


def format_result_table(rows: Sequence[dict[str, object]]) -> str:
    """Aligned text table with metric columns shown as percentages."""
    headers = list(RESULT_COLUMNS)
    display: list[list[str]] = []
    for row in rows:
        cells = []
        for col in headers:
            value = row.get(col)
            if value is None:
                cells.append("-")
            elif col in _METRIC_COLUMNS or col == "dev_objective":
                cells.append(f"{100.0 * value:.1f}")
            elif col == "retention":
                cells.append(f"{value:.2f}")
            elif isinstance(value, float):
                cells.append(f"{value:g}")
            else:
                cells.append(str(value))
        display.append(cells)
    widths = [
        max(len(headers[i]), max((len(r[i]) for r in display), default=0))
        for i in range(len(headers))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    lines.append("  ".join("-" * w for w in widths))
    for cells in display:
        lines.append("  ".join(cells[i].ljust(widths[i]) for i in range(len(cells))))
    return "\n".join(lines) + "\n"


TRACE_COLUMNS = (
    "fill_chars",
    "theta",
    "min_occ",
    "tau",
    "objective_value",
    "toxic_f1p",
    "toxic_precision",
    "toxic_recall",
    "nontoxic_f1p",
    "macro_f1p",
    "n_toxic",
    "n_nontoxic",
    "missing_predictions",
)


def write_trace_csv(tuned: TunedParams, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_COLUMNS)
        for row in tuned.trace:
            record: dict[str, object] = {
                "fill_chars": row.point.fill_chars,
                "theta": row.point.theta,
                "min_occ": row.point.min_occ,
                "tau": row.point.tau,
                "objective_value": row.objective_value,
            }
            record.update(row.report.to_row())
            writer.writerow([_fmt_cell(record.get(col)) for col in TRACE_COLUMNS])


def load_experiment(path: str | Path) -> tuple[ExperimentConfig, list[MethodSpec]]:
    """Parse a TOML experiment file; paths are relative to the file.

    Top-level keys: ``train`` (dataset name), ``setting``, optional
    ``objective``, ``seed``, a ``[datasets]`` table of name = path, an
    optional ``[binary]`` table of name = path, an optional ``[grid]``
    table overriding grid values, and one ``[[methods]]`` entry per
    method.
    """
    path = Path(path)
    root = path.parent
    try:
        with open(path, "rb") as handle:
            doc = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    def resolve(rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else root / p

    try:
        dataset_paths = doc["datasets"]
        train_name = doc["train"]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing required key {exc}") from None
    datasets = {name: read_canonical(resolve(p)) for name, p in dataset_paths.items()}

    try:
        setting = Setting(doc.get("setting", "oracle"))
    except ValueError:
        raise ConfigError(f"{path}: unknown setting {doc.get('setting')!r}") from None
    objective = None
    if "objective" in doc:
        try:
            objective = Objective(doc["objective"])
        except ValueError:
            raise ConfigError(f"{path}: unknown objective {doc['objective']!r}") from None

    binary = {
        name: load_binary(resolve(p)) for name, p in doc.get("binary", {}).items()
    }

    grid_doc = doc.get("grid", {})
    grid = GridSpec(
        fill_chars=tuple(grid_doc.get("fill_chars", FILL_GRID)),
        thetas=tuple(grid_doc.get("thetas", THETA_GRID)),
        min_occs=tuple(grid_doc.get("min_occs", MIN_OCC_GRID)),
        taus=tuple(grid_doc.get("taus", TAU_GRID)),
    )

    methods: list[MethodSpec] = []
    for m in doc.get("methods", []):
        try:
            kind = MethodKind(m["kind"])
        except (KeyError, ValueError):
            raise ConfigError(f"{path}: method {m.get('name')!r} has a missing or unknown kind") from None
        mode = MatchMode(
            mode=MatchKind(m.get("match_mode", "substring")),
            case_fold=bool(m.get("case_fold", True)),
        )
        methods.append(
            MethodSpec(
                name=m.get("name", kind.value),
                kind=kind,
                lexicon_path=resolve(m["lexicon"]) if "lexicon" in m else None,
                score_files={k: resolve(v) for k, v in m.get("scores", {}).items()},
                span_files={k: resolve(v) for k, v in m.get("spans", {}).items()},
                match_mode=mode,
                in_span_rule=InSpanRule(m.get("in_span_rule", "majority_chars")),
            )
        )
    if not methods:
        raise ConfigError(f"{path}: no methods configured")

    cfg = ExperimentConfig(
        train_name=train_name,
        datasets=datasets,
        setting=setting,
        objective=objective,
        binary=binary,
        grid=grid,
        seed=int(doc.get("seed", 0)),
    )
    return cfg, methods
