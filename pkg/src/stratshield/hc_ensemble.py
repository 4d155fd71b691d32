"""Max ensembles of feature-subset classifiers and hill-climbing training.

Each member commits to a feature subset and rejects any input missing one of
those features; the ensemble accepts when any member accepts. Withholding a
value can only silence members, never activate one, so the ensemble is
truthful by construction. Hill climbing retrains one member at a time on the
rows every other member rejects, which provably never increases the ensemble's
training loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .features import CATEGORICAL, MISSING, Dataset, FeatureSchema, FeatureSubset, FeatureVector
from .linear_models import FeatureCodec, LinearModel, TrainConfig, gradient_descent

InnerTrainer = Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class SubsetClassifier:
    """A classifier that sees only its feature subset and rejects on any gap.

    inner is None for an always-reject member (no trainable rows existed).
    """

    feature_set: FeatureSubset
    inner: LinearModel | None

    def applicable(self, x: FeatureVector) -> bool:
        return all(x[i] is not MISSING for i in self.feature_set)

    def predict(self, x: FeatureVector) -> int:
        if self.inner is None or not self.applicable(x):
            return 0
        return self.inner.predict(x)

    def proba(self, x: FeatureVector) -> float | None:
        """Probability when applicable; None when a needed feature is withheld."""
        if not self.applicable(x):
            return None
        if self.inner is None:
            return 0.0
        return self.inner.predict_proba(x)


@dataclass(frozen=True)
class MaxEnsemble:
    """Pointwise maximum of subset classifiers, with its training-loss trace."""

    members: tuple[SubsetClassifier, ...]
    loss_trace: tuple[Fraction, ...] = field(default=(), compare=False)

    truthful = True

    def predict(self, x: FeatureVector) -> int:
        return ensemble_predict(self, x)

    def predict_proba(self, x: FeatureVector) -> float:
        return ensemble_proba(self, x)


def ensemble_predict(ens: MaxEnsemble, x: FeatureVector) -> int:
    return 1 if any(m.predict(x) for m in ens.members) else 0


def ensemble_proba(ens: MaxEnsemble, x: FeatureVector) -> float:
    """Max probability across applicable members; 0.0 when none applies."""
    best = 0.0
    seen = False
    for m in ens.members:
        p = m.proba(x)
        if p is not None:
            best = p if not seen else max(best, p)
            seen = True
    return best if seen else 0.0


# ---------------------------------------------------------------------------
# Feature ranking and subset generation


def anova_f_scores(train: Dataset) -> np.ndarray:
    """One-way F statistic of each feature against the label.

    Numeric features use the standard between/within variance ratio over label
    groups, skipping missing entries. Categorical features pool the one-hot
    indicator variances. Zero within-group variance with any between-group
    signal scores +inf; degenerate features score 0.
    """
    y = np.array(train.labels())
    scores = np.zeros(train.schema.k)
    for i, spec in enumerate(train.schema.features):
        col = [(x[i], yy) for x, yy in train.rows if x[i] is not MISSING]
        if not col:
            continue
        vals = np.array([v for v, _ in col], dtype=float)
        labs = np.array([yy for _, yy in col])
        groups = [vals[labs == g] for g in (0, 1) if np.any(labs == g)]
        if len(groups) < 2:
            continue
        if spec.kind == CATEGORICAL:
            symbols = sorted(set(int(v) for v in vals))
            mats = [np.array([[1.0 if v == s else 0.0 for s in symbols] for v in g]) for g in groups]
            between = 0.0
            within = 0.0
            n = len(vals)
            for c in range(len(symbols)):
                grand = sum(m[:, c].sum() for m in mats) / n
                for m in mats:
                    between += len(m) * (m[:, c].mean() - grand) ** 2
                    within += ((m[:, c] - m[:, c].mean()) ** 2).sum()
        else:
            n = len(vals)
            grand = vals.mean()
            between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
            within = sum(((g - g.mean()) ** 2).sum() for g in groups)
        df_b = len(groups) - 1
        df_w = n - len(groups)
        if within <= 0 or df_w <= 0:
            scores[i] = np.inf if between > 0 else 0.0
        else:
            scores[i] = (between / df_b) / (within / df_w)
    return scores


def anova_f_rank(train: Dataset) -> list[int]:
    """Feature indices sorted by F statistic descending, ties broken by index."""
    scores = anova_f_scores(train)
    return sorted(range(train.schema.k), key=lambda i: (-scores[i], i))


def generate_subsets(
    schema: FeatureSchema,
    train: Dataset | None,
    strategy: tuple,
    seed: int = 0,
) -> list[FeatureSubset]:
    """Produce the member feature subsets for an ensemble.

    Strategies:
      ("all_subsets_of_top_k", k)  every nonempty subset of the k features that
                                   rank highest by ANOVA F on `train`
      ("sampled", n1, n2)          n1 singletons and n2 pairs sampled without
                                   replacement (all of them when fewer exist)
      ("explicit", subsets)        caller-supplied subsets, taken as given
    """
    kind = strategy[0]
    if kind == "explicit":
        subsets = [frozenset(s) for s in strategy[1]]
        if not subsets or any(not s for s in subsets):
            raise ValueError("explicit strategy needs nonempty subsets")
        return subsets
    if kind == "all_subsets_of_top_k":
        kk = int(strategy[1])
        if kk > schema.k:
            raise ValueError(f"top-{kk} exceeds arity {schema.k}")
        if train is None:
            raise ValueError("top-k strategy needs training data for the ranking")
        top = sorted(anova_f_rank(train)[:kk])
        return [
            frozenset(top[j] for j in range(kk) if mask >> j & 1)
            for mask in range(1, 1 << kk)
        ]
    if kind == "sampled":
        n1, n2 = int(strategy[1]), int(strategy[2])
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        k = schema.k
        singles = list(range(k))
        if len(singles) > n1:
            singles = sorted(rng.choice(k, size=n1, replace=False).tolist())
        pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
        if len(pairs) > n2:
            idx = sorted(rng.choice(len(pairs), size=n2, replace=False).tolist())
            pairs = [pairs[i] for i in idx]
        return [frozenset([i]) for i in singles] + [frozenset(p) for p in pairs]
    raise ValueError(f"unknown subset strategy {kind!r}")


# ---------------------------------------------------------------------------
# Hill-climbing training


@dataclass(frozen=True)
class HcConfig:
    """Hill-climbing settings.

    strategy feeds generate_subsets; delta is the minimum per-sweep improvement
    in training loss to continue; max_iterations caps sweeps (defaults to the
    number of training rows, the proven convergence bound).
    """

    strategy: tuple = ("sampled", 30, 30)
    delta: float = 1e-4
    max_iterations: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


def _default_inner(inner_cfg: TrainConfig) -> InnerTrainer:
    def fit(X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
        return gradient_descent(X, y, inner_cfg)[:2]

    return fit


def hc_train(
    train: Dataset,
    cfg: HcConfig | None = None,
    inner_trainer: InnerTrainer | None = None,
    subsets: Sequence[FeatureSubset] | None = None,
    codec: FeatureCodec | None = None,
) -> MaxEnsemble:
    """Hill-climb a max ensemble: sweep members, retraining each on the rows
    all other members reject, keeping the retrained member only when it does
    not lose to the incumbent on those rows.

    The keep-best rule makes the per-sweep training loss trace (attached to the
    returned ensemble) non-increasing, and integer-valued losses bound the
    number of improving sweeps by the row count.
    """
    cfg = cfg or HcConfig()
    inner = inner_trainer or _default_inner(TrainConfig())
    if subsets is None:
        subsets = generate_subsets(train.schema, train, cfg.strategy, cfg.seed)
    if not subsets:
        raise ValueError("need at least one feature subset")
    codec = codec or FeatureCodec.fit(train)
    m = len(train.rows)
    X = codec.encode_rows(train.vectors())
    y = np.array(train.labels())
    n = len(subsets)
    cols = [codec.column_indices(s) for s in subsets]
    possess = np.array(
        [[all(x[i] is not MISSING for i in s) for x, _ in train.rows] for s in subsets]
    )

    params: list[tuple[float, np.ndarray] | None] = [None] * n
    preds = np.zeros((n, m), dtype=bool)

    def member_predictions(j: int) -> np.ndarray:
        if params[j] is None:
            return np.zeros(m, dtype=bool)
        b0, w = params[j]
        return possess[j] & (X[:, cols[j]] @ w + b0 >= 0)

    # init: each member fits every row that has its features
    for j in range(n):
        rows = possess[j]
        if rows.any():
            params[j] = inner(X[np.ix_(rows, cols[j])], y[rows].astype(float))
            preds[j] = member_predictions(j)

    def ensemble_errors() -> int:
        return int((preds.any(axis=0) != (y == 1)).sum())

    trace = [Fraction(ensemble_errors(), m)]
    accept_count = preds.sum(axis=0)
    max_sweeps = cfg.max_iterations if cfg.max_iterations is not None else m
    for _ in range(max_sweeps):
        for j in range(n):
            others_accept = accept_count - preds[j].astype(int) > 0
            s_rows = ~others_accept
            fit_rows = s_rows & possess[j]
            if not fit_rows.any():
                continue
            candidate = inner(X[np.ix_(fit_rows, cols[j])], y[fit_rows].astype(float))
            b0, w = candidate
            cand_pred = possess[j] & (X[:, cols[j]] @ w + b0 >= 0)
            truth = y == 1
            cand_loss = int((cand_pred[s_rows] != truth[s_rows]).sum())
            inc_loss = int((preds[j][s_rows] != truth[s_rows]).sum())
            if cand_loss <= inc_loss:
                params[j] = candidate
                accept_count = accept_count - preds[j].astype(int) + cand_pred.astype(int)
                preds[j] = cand_pred
        trace.append(Fraction(ensemble_errors(), m))
        if trace[-2] - trace[-1] < cfg.delta:
            break

    members = tuple(
        SubsetClassifier(
            subsets[j],
            None
            if params[j] is None
            else LinearModel(codec.restrict(subsets[j]), params[j][0], params[j][1]),
        )
        for j in range(n)
    )
    return MaxEnsemble(members, tuple(trace))
