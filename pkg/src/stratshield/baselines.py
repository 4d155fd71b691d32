"""Non-strategic baselines: exact-match majority vote, imputation + logistic
regression, and reduced-feature (per-pattern) logistic regression.

None of these is truthful in general; they exist to measure how much accuracy
collapses once agents start withholding against them.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .features import (
    CATEGORICAL,
    MISSING,
    Dataset,
    FeatureSubset,
    FeatureVector,
    present_indices,
)
from .linear_models import (
    FeatureCodec,
    LinearModel,
    TrainConfig,
    gradient_descent,
)
from .strategic import best_response_imputed_linear


# ---------------------------------------------------------------------------
# Maj: exact-vector majority


@dataclass(frozen=True)
class MajModel:
    """Majority label per exact training vector; anything unseen is rejected."""

    table: dict[FeatureVector, int] = field(compare=False)

    truthful = False

    def predict(self, x: FeatureVector) -> int:
        return self.table.get(x, 0)

    def predict_proba(self, x: FeatureVector) -> float:
        return float(self.table.get(x, 0))


def train_maj(train: Dataset) -> MajModel:
    counts: dict[FeatureVector, list[int]] = {}
    for x, y in train.rows:
        counts.setdefault(x, [0, 0])[y] += 1
    table = {x: 1 if c[1] > c[0] else 0 for x, c in counts.items()}
    return MajModel(table)


# ---------------------------------------------------------------------------
# Imp(LR): fill gaps with train mean/mode, then logistic regression


@dataclass(frozen=True)
class ImputedLrModel:
    """Logistic regression over mean/mode-imputed inputs.

    impute_values holds one raw fill-in per feature (mean for numeric, mode
    for categorical), computed on training rows where the feature is present.
    """

    impute_values: tuple
    inner: LinearModel

    truthful = False

    def impute(self, x: FeatureVector) -> FeatureVector:
        return tuple(
            self.impute_values[i] if v is MISSING else v for i, v in enumerate(x)
        )

    def predict(self, x: FeatureVector) -> int:
        return self.inner.predict(self.impute(x))

    def predict_proba(self, x: FeatureVector) -> float:
        return self.inner.predict_proba(self.impute(x))

    def strategic_best_response(self, x: FeatureVector) -> FeatureVector:
        return best_response_imputed_linear(self.inner, self.impute_values, x)


def impute_values_from(train: Dataset) -> tuple:
    """Per-feature mean (numeric) or mode (categorical, ties to the smallest
    symbol); 0.0 / 0 when the feature never appears."""
    fills = []
    for i, spec in enumerate(train.schema.features):
        col = [x[i] for x, _ in train.rows if x[i] is not MISSING]
        if spec.kind == CATEGORICAL:
            if not col:
                fills.append(0)
                continue
            freq = Counter(col)
            top = max(freq.values())
            fills.append(min(s for s, c in freq.items() if c == top))
        else:
            fills.append(float(np.mean(col)) if col else 0.0)
    return tuple(fills)


def train_imp_lr(train: Dataset, cfg: TrainConfig | None = None) -> ImputedLrModel:
    cfg = cfg or TrainConfig()
    fills = impute_values_from(train)
    filled = train.with_rows(
        [
            (tuple(fills[i] if v is MISSING else v for i, v in enumerate(x)), y)
            for x, y in train.rows
        ]
    )
    codec = FeatureCodec.fit(filled)
    X = codec.encode_rows(filled.vectors())
    y = np.array(filled.labels(), dtype=float)
    b0, w, _ = gradient_descent(X, y, cfg)
    return ImputedLrModel(fills, LinearModel(codec, b0, w))


# ---------------------------------------------------------------------------
# R-F(LR): one logistic regression per present-feature pattern


@dataclass(frozen=True)
class ReducedFeatureModel:
    """Routes each input to the model trained for its present-feature pattern.

    Patterns never seen in training reject. A pattern whose training rows all
    share one label gets a constant model (inner None, constant stored).
    """

    per_pattern: dict[FeatureSubset, tuple[LinearModel | None, int]] = field(compare=False)

    truthful = False

    def _route(self, x: FeatureVector) -> tuple[LinearModel | None, int] | None:
        return self.per_pattern.get(frozenset(present_indices(x)))

    def predict(self, x: FeatureVector) -> int:
        entry = self._route(x)
        if entry is None:
            return 0
        model, constant = entry
        return constant if model is None else model.predict(x)

    def predict_proba(self, x: FeatureVector) -> float:
        entry = self._route(x)
        if entry is None:
            return 0.0
        model, constant = entry
        return float(constant) if model is None else model.predict_proba(x)


def train_rf_lr(train: Dataset, cfg: TrainConfig | None = None) -> ReducedFeatureModel:
    """Fit one LR per pattern on every training row containing that pattern's
    features, projected down to them."""
    cfg = cfg or TrainConfig()
    patterns = {frozenset(present_indices(x)) for x, _ in train.rows}
    per_pattern: dict[FeatureSubset, tuple[LinearModel | None, int]] = {}
    for pattern in patterns:
        rows = [
            (tuple(v if i in pattern else MISSING for i, v in enumerate(x)), y)
            for x, y in train.rows
            if pattern <= frozenset(present_indices(x))
        ]
        labels = {y for _, y in rows}
        if len(labels) < 2:
            per_pattern[pattern] = (None, labels.pop())
            continue
        sub = train.with_rows(rows)
        codec = FeatureCodec.fit(sub).restrict(pattern)
        X = codec.encode_rows(sub.vectors())
        y = np.array(sub.labels(), dtype=float)
        b0, w, _ = gradient_descent(X, y, cfg)
        per_pattern[pattern] = (LinearModel(codec, b0, w), 0)
    return ReducedFeatureModel(per_pattern)
