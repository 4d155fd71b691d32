"""Agent best responses, strategic vs truthful accuracy, and truthfulness audits.

An agent holding x may report any projection of x onto a subset of its present
features. The best response is a report maximizing the classifier's output;
for truthful classifiers that is x itself, so evaluation under strategic
behavior collapses to ordinary evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .features import (
    ENUMERATION_LIMIT,
    Dataset,
    FeatureVector,
    iter_reachable,
    present_indices,
    project,
)


@dataclass(frozen=True)
class ClassifierHandle:
    """Uniform wrapper: a predict function plus the flags evaluation needs.

    truthful=True lets best_response skip report enumeration. Models that know
    their own agents' shortcut (like imputation-based linear models) may supply
    strategic_best_response instead.
    """

    predict: Callable[[FeatureVector], int]
    proba: Callable[[FeatureVector], float] | None = None
    truthful: bool = False
    strategic_best_response: Callable[[FeatureVector], FeatureVector] | None = None


def as_handle(model) -> ClassifierHandle:
    """Wrap a model object (anything with .predict) into a ClassifierHandle."""
    if isinstance(model, ClassifierHandle):
        return model
    return ClassifierHandle(
        predict=model.predict,
        proba=getattr(model, "predict_proba", None),
        truthful=bool(getattr(model, "truthful", False)),
        strategic_best_response=getattr(model, "strategic_best_response", None),
    )


def best_response(
    f,
    x: FeatureVector,
    limit: int = ENUMERATION_LIMIT,
    use_fast_path: bool = True,
) -> tuple[FeatureVector, int]:
    """The report an agent holding x submits against f, and f's decision on it.

    Truthful classifiers admit the fast path (report x itself); pass
    use_fast_path=False to force enumeration, e.g. to check the flag. Among
    accepted reports the first in subset-mask order is returned, so the outcome
    is deterministic; when every report is rejected the agent reports x.
    """
    handle = as_handle(f)
    if use_fast_path:
        if handle.truthful:
            return x, handle.predict(x)
        if handle.strategic_best_response is not None:
            r = handle.strategic_best_response(x)
            return r, handle.predict(r)
    for report in iter_reachable(x, limit):
        if handle.predict(report) == 1:
            return report, 1
    return x, 0


def direct_revelation(f, limit: int = ENUMERATION_LIMIT) -> ClassifierHandle:
    """The truthful classifier induced by letting f's agents respond optimally:
    accept x iff some report reachable from x is accepted by f."""
    handle = as_handle(f)

    def predict(x: FeatureVector) -> int:
        return best_response(handle, x, limit)[1]

    return ClassifierHandle(predict=predict, truthful=True)


def strategic_accuracy(
    f,
    data: Dataset,
    limit: int = ENUMERATION_LIMIT,
    use_fast_path: bool = True,
) -> Fraction:
    """Accuracy when every row plays its best response against f."""
    handle = as_handle(f)
    hits = 0
    for x, y in data.rows:
        _, decision = best_response(handle, x, limit, use_fast_path)
        hits += decision == y
    return Fraction(hits, len(data.rows))


def truthful_accuracy(f, data: Dataset) -> Fraction:
    """Accuracy when every row reports exactly what it holds."""
    handle = as_handle(f)
    hits = sum(handle.predict(x) == y for x, y in data.rows)
    return Fraction(hits, len(data.rows))


def best_response_imputed_linear(model, impute_values, x: FeatureVector) -> FeatureVector:
    """Optimal report against a linear model that imputes withheld values.

    Filling a withheld feature with a fixed imputation makes each feature's
    contribution independent: drop feature i exactly when the encoded value it
    carries scores below the encoded imputation it would be replaced by.
    """
    codec = model.codec
    w = model.coefficients
    imputed = impute_values
    keep = []
    for i in present_indices(x):
        delta = 0.0
        for j, col in enumerate(codec.columns):
            if col.source != i:
                continue
            delta += w[j] * (codec.encode_value(col, x[i]) - codec.encode_value(col, imputed[i]))
        if delta >= 0:
            keep.append(i)
    return project(x, frozenset(keep))


@dataclass(frozen=True)
class AuditReport:
    """Outcome of a truthfulness audit.

    violations lists (x, report) pairs where withholding flipped a rejection
    into an acceptance; checked counts report evaluations performed.
    """

    violations: tuple[tuple[FeatureVector, FeatureVector], ...]
    checked: int
    seed: int

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_truthfulness(
    f,
    samples: Dataset | Sequence[FeatureVector],
    trials_per_row: int | None = None,
    seed: int = 0,
    limit: int = ENUMERATION_LIMIT,
) -> AuditReport:
    """Hunt for inputs whose agents gain by withholding.

    trials_per_row=None checks every proper sub-report of every sample (the
    sample's lattice must fit under `limit` present features); an integer
    checks that many randomly drawn proper sub-reports per sample instead.
    """
    handle = as_handle(f)
    if isinstance(samples, Dataset):
        samples = samples.vectors()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    violations: list[tuple[FeatureVector, FeatureVector]] = []
    checked = 0
    for x in samples:
        base = handle.predict(x)
        present = present_indices(x)
        if trials_per_row is None:
            for report in iter_reachable(x, limit):
                if report == x:
                    continue
                checked += 1
                if handle.predict(report) > base:
                    violations.append((x, report))
        else:
            if not present:
                continue
            for _ in range(trials_per_row):
                drop_n = int(rng.integers(1, len(present) + 1))
                dropped = rng.choice(len(present), size=drop_n, replace=False)
                kept = frozenset(
                    p for k, p in enumerate(present) if k not in set(dropped.tolist())
                )
                report = project(x, kept)
                if report == x:
                    continue
                checked += 1
                if handle.predict(report) > base:
                    violations.append((x, report))
    return AuditReport(tuple(violations), checked, seed)
