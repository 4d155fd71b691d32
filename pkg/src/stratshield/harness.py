"""Experiment pipeline: CSV ingestion, masking / balancing / discretization,
feature restriction, repeated 50/50 cross-validation, and metrics.

The pipeline is a pure function of (dataset bytes, config, seed). Each repeat
owns an RNG stream derived from (seed, repeat); data-dependent preprocessing
(feature ranking, discretization cuts, value shifts, imputation) is fitted on
the training half of each fold only.
"""

from __future__ import annotations

import bisect
import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .baselines import train_imp_lr, train_maj, train_rf_lr
from .empirical import EmpiricalDistribution
from .features import (
    CATEGORICAL,
    MISSING,
    NUMERIC,
    Dataset,
    FeatureSchema,
    FeatureVector,
    bin_index,
    discretize_mdlp,
    schema,
)
from .hc_ensemble import HcConfig, anova_f_rank, hc_train
from .linear_models import TrainConfig, gradient_descent, train_iclr, train_logistic
from .mincut import brute_force_optimal, train_mincut
from .strategic import as_handle, strategic_accuracy, truthful_accuracy

DEFAULT_MISSING_TOKENS = ("?", "", "NA")
DEFAULT_CLASSIFIERS = ("mincut", "hc", "iclr", "maj", "imp_lr", "rf_lr")
GRID_LEARNING_RATES = (0.01, 0.1)


class StageError(RuntimeError):
    """An experiment failure, tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ---------------------------------------------------------------------------
# CSV ingestion


def load_csv(
    path,
    label: str = "label",
    positive_label: str | None = None,
    missing_tokens: Sequence[str] = DEFAULT_MISSING_TOKENS,
    kind_hints: dict[str, str] | None = None,
) -> Dataset:
    """Read a headed CSV into a typed Dataset.

    Columns parse as numeric when every non-missing cell does; otherwise they
    are categorical, with symbols interned by first appearance. kind_hints
    maps column names to "numeric"/"categorical" to override inference. Label
    values must be 0/1 unless positive_label names the value mapped to 1.
    """
    missing = set(missing_tokens)
    hints = kind_hints or {}
    if hasattr(path, "read"):
        reader = csv.reader(path)
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            return load_csv(fh, label, positive_label, missing_tokens, kind_hints)
    rows = list(reader)
    if not rows:
        raise ValueError("empty CSV: no header row")
    header = [h.strip() for h in rows[0]]
    if label not in header:
        raise ValueError(f"label column {label!r} not in header {header}")
    label_col = header.index(label)
    names = [h for j, h in enumerate(header) if j != label_col]
    feat_cols = [j for j in range(len(header)) if j != label_col]
    for h in hints:
        if h not in names:
            raise ValueError(f"kind hint for unknown column {h!r}")

    cells: list[list[str | None]] = []
    labels: list[int] = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"row {i}: expected {len(header)} fields, got {len(row)}")
        stripped = [c.strip() for c in row]
        tok = stripped[label_col]
        if positive_label is not None:
            labels.append(1 if tok == positive_label else 0)
        elif tok in ("0", "1"):
            labels.append(int(tok))
        else:
            raise ValueError(f"row {i}: unknown label value {tok!r}")
        cells.append([None if c in missing else c for j, c in enumerate(stripped) if j != label_col])

    kinds: list[str] = []
    parsed: list[list] = []
    for c, name in enumerate(names):
        col = [r[c] for r in cells]
        hint = hints.get(name)
        numeric_ok = all(_floats(v) is not None for v in col if v is not None)
        if hint == NUMERIC or (hint is None and numeric_ok):
            if not numeric_ok:
                bad = next(v for v in col if v is not None and _floats(v) is None)
                raise ValueError(f"column {name!r}: unparseable numeric {bad!r}")
            kinds.append(NUMERIC)
            parsed.append([None if v is None else float(v) for v in col])
        else:
            kinds.append(CATEGORICAL)
            interned: dict[str, int] = {}
            out = []
            for v in col:
                if v is None:
                    out.append(None)
                else:
                    out.append(interned.setdefault(v, len(interned)))
            parsed.append(out)
    data_rows = [
        (tuple(parsed[c][r] for c in range(len(names))), labels[r])
        for r in range(len(cells))
    ]
    return Dataset(schema(kinds, names), tuple(data_rows))


def _floats(tok: str) -> float | None:
    try:
        v = float(tok)
    except ValueError:
        return None
    return v if np.isfinite(v) else None


# ---------------------------------------------------------------------------
# Row-level transforms


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def mask_features(data: Dataset, epsilon: float, seed=0) -> Dataset:
    """Independently blank each present cell with probability epsilon.

    Draws happen in row-major cell order, so the result is deterministic per
    seed (or per the state of a passed Generator).
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must be in [0, 1), got {epsilon}")
    if epsilon == 0.0:
        return data
    rng = _as_rng(seed)
    rows = []
    for x, y in data.rows:
        masked = tuple(
            MISSING if v is not MISSING and rng.random() < epsilon else v for v in x
        )
        rows.append((masked, y))
    return data.with_rows(rows)


def undersample_balance(data: Dataset, seed=0) -> Dataset:
    """Subsample the majority class (without replacement) to the minority
    size, then shuffle the row order."""
    rng = _as_rng(seed)
    pos = [i for i, (_, y) in enumerate(data.rows) if y == 1]
    neg = [i for i, (_, y) in enumerate(data.rows) if y == 0]
    if not pos or not neg:
        raise ValueError("balancing needs both classes present")
    small, big = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    picked = sorted(rng.choice(len(big), size=len(small), replace=False).tolist())
    keep = sorted(small + [big[i] for i in picked])
    order = rng.permutation(len(keep))
    return data.with_rows([data.rows[keep[i]] for i in order])


# ---------------------------------------------------------------------------
# Fold-fitted preprocessing


@dataclass(frozen=True)
class Discretizer:
    """Entropy-based cut points per numeric feature; applying one turns each
    numeric column into a categorical bin-id column."""

    source_schema: FeatureSchema
    cuts: tuple[tuple[float, ...], ...]

    @property
    def schema(self) -> FeatureSchema:
        return schema(
            [CATEGORICAL for _ in self.source_schema.features],
            [f.name for f in self.source_schema.features],
        )

    def apply(self, data: Dataset) -> Dataset:
        rows = []
        for x, y in data.rows:
            out = tuple(
                v
                if v is MISSING
                else (bin_index(float(v), self.cuts[i]) if self.source_schema.features[i].kind == NUMERIC else int(v))
                for i, v in enumerate(x)
            )
            rows.append((out, y))
        return Dataset(self.schema, tuple(rows))


def fit_discretizer(train: Dataset) -> Discretizer:
    """Learn MDLP cut points for every numeric feature from training rows."""
    cuts = []
    for i, spec in enumerate(train.schema.features):
        if spec.kind != NUMERIC:
            cuts.append(())
            continue
        col = [(float(x[i]), y) for x, y in train.rows if x[i] is not MISSING]
        cuts.append(tuple(discretize_mdlp(col)))
    return Discretizer(train.schema, tuple(cuts))


def select_features(train: Dataset, k: int = 4) -> tuple[int, ...]:
    """Indices of the top-k features by label F statistic, ascending order."""
    return tuple(sorted(anova_f_rank(train)[: min(k, train.schema.k)]))


def project_columns(data: Dataset, selected: Sequence[int]) -> Dataset:
    """Dataset with only the selected feature columns (arity shrinks)."""
    feats = [data.schema.features[i] for i in selected]
    sch = FeatureSchema(tuple(feats))
    rows = [(tuple(x[i] for i in selected), y) for x, y in data.rows]
    return Dataset(sch, tuple(rows))


@dataclass(frozen=True)
class FoldPipeline:
    """Preprocessing fitted on one training half: optional top-k feature
    selection followed by optional discretization."""

    selected: tuple[int, ...] | None
    discretizer: Discretizer | None

    def apply(self, data: Dataset) -> Dataset:
        if self.selected is not None:
            data = project_columns(data, self.selected)
        if self.discretizer is not None:
            data = self.discretizer.apply(data)
        return data


def fit_pipeline(train: Dataset, top_k: int | None, discretize: bool) -> FoldPipeline:
    selected = select_features(train, top_k) if top_k is not None else None
    if selected is not None:
        train = project_columns(train, selected)
    disc = fit_discretizer(train) if discretize else None
    return FoldPipeline(selected, disc)


# ---------------------------------------------------------------------------
# Metrics


def auc(scores: Sequence[tuple[float, int]]) -> float | None:
    """Mann-Whitney AUC (ties count half); None when one class is absent."""
    pos = sorted(s for s, y in scores if y == 1)
    neg = sorted(s for s, y in scores if y == 0)
    if not pos or not neg:
        return None
    wins = 0.0
    for s in pos:
        lo = bisect.bisect_left(neg, s)
        hi = bisect.bisect_right(neg, s)
        wins += lo + 0.5 * (hi - lo)
    return wins / (len(pos) * len(neg))


@dataclass(frozen=True)
class MetricRow:
    """Aggregated per-classifier results over all evaluated folds."""

    classifier: str
    truthful_mean: float
    truthful_std: float
    strategic_mean: float
    strategic_std: float
    auc_mean: float | None
    auc_std: float | None
    folds: int


@dataclass(frozen=True)
class ExperimentConfig:
    """The full experiment recipe: where the data lives, how to perturb it,
    what to train, and where results go."""

    dataset: str | None = None
    label: str = "label"
    positive_label: str | None = None
    missing_tokens: tuple[str, ...] = DEFAULT_MISSING_TOKENS
    epsilon: float = 0.0
    balance: bool = False
    feature_restriction: str = "none"
    discretize: bool = False
    classifiers: tuple[str, ...] = DEFAULT_CLASSIFIERS
    repeats: int = 1
    seed: int = 0
    grid: bool = False
    invert: bool = True
    clamp_intercept: bool = False
    threads: int | None = None
    out: str | None = None
    figure: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.feature_restriction not in ("none", "top4"):
            raise ValueError(f"unknown feature restriction {self.feature_restriction!r}")
        if any(c not in CLASSIFIER_NAMES for c in self.classifiers):
            unknown = [c for c in self.classifiers if c not in CLASSIFIER_NAMES]
            raise ValueError(f"unknown classifiers {unknown}; known: {sorted(CLASSIFIER_NAMES)}")


# ---------------------------------------------------------------------------
# Classifier factories


def _grid_lr(train: Dataset, build, seed: int) -> float:
    """Pick a learning rate by 5-fold accuracy on the training half."""
    n = len(train.rows)
    rng = _as_rng((seed, 577))
    order = rng.permutation(n)
    folds = [order[i::5] for i in range(5)]
    best = (None, -1.0)
    for lr in GRID_LEARNING_RATES:
        hits = 0
        total = 0
        for f in folds:
            holdout = set(f.tolist())
            tr = train.with_rows([train.rows[i] for i in range(n) if i not in holdout])
            va = [train.rows[i] for i in sorted(holdout)]
            if len(set(tr.labels())) < 2 or not va:
                continue
            model = build(tr, lr)
            handle = as_handle(model)
            hits += sum(handle.predict(x) == y for x, y in va)
            total += len(va)
        acc = hits / total if total else 0.0
        if acc > best[1]:
            best = (lr, acc)
    return best[0] if best[0] is not None else TrainConfig().learning_rate


def make_factories(cfg: ExperimentConfig) -> dict[str, Callable[[Dataset], object]]:
    """Bind config choices into per-classifier training callables."""

    def cfg_for(lr: float) -> TrainConfig:
        return TrainConfig(learning_rate=lr)

    def pick_lr(train: Dataset, build) -> float:
        if not cfg.grid:
            return TrainConfig().learning_rate
        return _grid_lr(train, build, cfg.seed)

    def mincut(train: Dataset):
        return train_mincut(train)

    def hc(train: Dataset):
        if cfg.feature_restriction == "top4":
            strategy = ("all_subsets_of_top_k", min(4, train.schema.k))
        else:
            strategy = ("sampled", 30, 30)
        hc_cfg = HcConfig(strategy=strategy, seed=cfg.seed)
        lr = pick_lr(train, lambda tr, r: hc_train(tr, hc_cfg, inner_trainer=_inner(r)))
        return hc_train(train, hc_cfg, inner_trainer=_inner(lr))

    def iclr(train: Dataset):
        lr = pick_lr(train, lambda tr, lr: train_iclr(
            tr, cfg_for(lr), invert=cfg.invert, clamp_intercept=cfg.clamp_intercept))
        return train_iclr(train, cfg_for(lr), invert=cfg.invert, clamp_intercept=cfg.clamp_intercept)

    def lr_plain(train: Dataset):
        lr = pick_lr(train, lambda tr, lr: train_logistic(tr, cfg_for(lr)))
        return train_logistic(train, cfg_for(lr))

    def maj(train: Dataset):
        return train_maj(train)

    def imp_lr(train: Dataset):
        lr = pick_lr(train, lambda tr, lr: train_imp_lr(tr, cfg_for(lr)))
        return train_imp_lr(train, cfg_for(lr))

    def rf_lr(train: Dataset):
        lr = pick_lr(train, lambda tr, lr: train_rf_lr(tr, cfg_for(lr)))
        return train_rf_lr(train, cfg_for(lr))

    table = {
        "mincut": mincut,
        "hc": hc,
        "iclr": iclr,
        "lr": lr_plain,
        "maj": maj,
        "imp_lr": imp_lr,
        "rf_lr": rf_lr,
    }
    return {name: table[name] for name in cfg.classifiers}


def _inner(lr: float):
    def fit(X, y):
        return gradient_descent(X, y, TrainConfig(learning_rate=lr))[:2]

    return fit


CLASSIFIER_NAMES = frozenset({"mincut", "hc", "iclr", "lr", "maj", "imp_lr", "rf_lr"})


# ---------------------------------------------------------------------------
# N x 2 cross-validation


@dataclass(frozen=True)
class FoldOutcome:
    repeat: int
    fold: int
    results: dict[str, tuple[float, float, float | None]] = field(compare=False)
    skipped: str | None = None


def _worker_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("STRATSHIELD_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _run_repeat(data: Dataset, cfg: ExperimentConfig, factories, repeat: int) -> list[FoldOutcome]:
    rng = _as_rng((cfg.seed, repeat))
    d = data
    if cfg.balance:
        d = undersample_balance(d, rng)
    if cfg.epsilon > 0:
        d = mask_features(d, cfg.epsilon, rng)
    n = len(d.rows)
    order = rng.permutation(n)
    halves = (order[: n // 2], order[n // 2 :])
    outcomes = []
    top_k = 4 if cfg.feature_restriction == "top4" else None
    for fold in (0, 1):
        train_rows = [d.rows[i] for i in halves[fold]]
        test_rows = [d.rows[i] for i in halves[1 - fold]]
        train = d.with_rows(train_rows)
        test = d.with_rows(test_rows)
        if len(set(train.labels())) < 2 or len(set(test.labels())) < 2:
            outcomes.append(FoldOutcome(repeat, fold, {}, skipped="single-class half"))
            continue
        pipe = fit_pipeline(train, top_k, cfg.discretize)
        train_p = pipe.apply(train)
        test_p = pipe.apply(test)
        results: dict[str, tuple[float, float, float | None]] = {}
        for name, factory in factories.items():
            model = factory(train_p)
            handle = as_handle(model)
            tru = float(truthful_accuracy(handle, test_p))
            strat = float(strategic_accuracy(handle, test_p))
            fold_auc = None
            if handle.proba is not None:
                fold_auc = auc([(handle.proba(x), y) for x, y in test_p.rows])
            results[name] = (tru, strat, fold_auc)
        outcomes.append(FoldOutcome(repeat, fold, results))
    return outcomes


def nx2_cv(
    data: Dataset,
    cfg: ExperimentConfig,
    factories: dict[str, Callable[[Dataset], object]] | None = None,
) -> tuple[list[MetricRow], list[FoldOutcome]]:
    """Run N repeats of (balance -> mask -> 50/50 split), train on each half
    and test on the other, and aggregate per-classifier means and stddevs over
    the evaluated folds. Returns (rows, skipped folds)."""
    factories = factories or make_factories(cfg)
    workers = _worker_count(cfg.threads)
    if workers > 1 and cfg.repeats > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per_repeat = list(ex.map(lambda r: _run_repeat(data, cfg, factories, r), range(cfg.repeats)))
    else:
        per_repeat = [_run_repeat(data, cfg, factories, r) for r in range(cfg.repeats)]
    outcomes = sorted(
        (o for rep in per_repeat for o in rep), key=lambda o: (o.repeat, o.fold)
    )
    skipped = [o for o in outcomes if o.skipped]
    rows = []
    for name in factories:
        tru = [o.results[name][0] for o in outcomes if not o.skipped]
        strat = [o.results[name][1] for o in outcomes if not o.skipped]
        aucs = [o.results[name][2] for o in outcomes if not o.skipped and o.results[name][2] is not None]
        rows.append(
            MetricRow(
                classifier=name,
                truthful_mean=_mean(tru),
                truthful_std=_std(tru),
                strategic_mean=_mean(strat),
                strategic_std=_std(strat),
                auc_mean=_mean(aucs) if aucs else None,
                auc_std=_std(aucs) if aucs else None,
                folds=len(tru),
            )
        )
    return rows, skipped


def _mean(vals: Sequence[float]) -> float:
    return float(np.mean(vals)) if vals else 0.0


def _std(vals: Sequence[float]) -> float:
    if len(vals) < 2:
        return 0.0
    return float(np.std(vals, ddof=1))


# ---------------------------------------------------------------------------
# Example walkthrough distribution


@dataclass(frozen=True)
class ExampleResult:
    distribution: EmpiricalDistribution
    accepted: frozenset[FeatureVector]
    loss: Fraction
    brute_force_loss: Fraction


def example1() -> ExampleResult:
    """Two test scores, high (1) / low (0) / withheld; eight equally likely
    inputs with known positive rates, as integer counts over 80. The optimal
    truthful classifier accepts {(h,h),(h,l),(h,*)} at loss 22/80."""
    sch = schema([CATEGORICAL, CATEGORICAL], ["sat", "act"])
    h, l = 1, 0
    entries: dict[FeatureVector, tuple[int, int]] = {
        (h, h): (9, 1),
        (h, l): (7, 3),
        (l, h): (3, 7),
        (l, l): (1, 9),
        (h, MISSING): (6, 4),
        (MISSING, h): (6, 4),
        (l, MISSING): (2, 8),
        (MISSING, l): (2, 8),
    }
    dist = EmpiricalDistribution(entries, total=80, schema=sch)
    model = train_mincut(dist)
    brute_loss, _ = brute_force_optimal(dist)
    return ExampleResult(dist, model.accepted, model.loss, brute_loss)


# ---------------------------------------------------------------------------
# Orchestration


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple[MetricRow, ...]
    skipped: tuple[FoldOutcome, ...]
    csv_text: str
    table_text: str
    files: tuple[str, ...]


def run_experiment(cfg: ExperimentConfig, data: Dataset | None = None) -> ExperimentResult:
    """Load (unless data is passed), cross-validate, render, and optionally
    write results under the cfg.out prefix (.csv, .txt, and a .png figure).

    Any failure surfaces as a StageError naming the stage that raised it.
    """
    from . import report

    if data is None:
        if cfg.dataset is None:
            raise StageError("load", "no dataset path configured and no data passed")
        try:
            data = load_csv(
                cfg.dataset,
                label=cfg.label,
                positive_label=cfg.positive_label,
                missing_tokens=cfg.missing_tokens,
            )
        except (OSError, ValueError) as exc:
            raise StageError("load", str(exc)) from exc
    try:
        rows, skipped = nx2_cv(data, cfg)
    except (ValueError, ArithmeticError) as exc:
        raise StageError("cv", str(exc)) from exc
    try:
        csv_text = report.format_csv(rows)
        table_text = report.format_table(rows, skipped=len(skipped))
        files: list[str] = []
        if cfg.out:
            with open(cfg.out + ".csv", "w", encoding="utf-8", newline="") as fh:
                fh.write(csv_text)
            files.append(cfg.out + ".csv")
            with open(cfg.out + ".txt", "w", encoding="utf-8") as fh:
                fh.write(table_text)
            files.append(cfg.out + ".txt")
            if cfg.figure:
                report.render_figure(rows, cfg.out + ".png")
                files.append(cfg.out + ".png")
    except OSError as exc:
        raise StageError("report", str(exc)) from exc
    return ExperimentResult(tuple(rows), tuple(skipped), csv_text, table_text, tuple(files))
