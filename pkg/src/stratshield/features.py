"""Feature vectors whose values can be withheld.

Defines the schema/vector/dataset types, the projection lattice that models
strategic withholding (project, can_report, reachable_set), and the
train-time preprocessing transforms used by the linear models: nonnegative
shift, inverted copies, and entropy-based (MDLP) discretization.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# Withheld/absent value. None hashes as its own symbol, so canonical tuple
# equality treats Missing == Missing and never collides with a real value.
MISSING = None

Value = float | int | None
FeatureVector = tuple[Value, ...]
FeatureSubset = frozenset[int]

# Ceiling on 2^p lattice enumerations (p = present features).
ENUMERATION_LIMIT = 20


class LatticeTooLargeError(ValueError):
    """Raised when a projection lattice exceeds the enumeration limit."""


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str  # NUMERIC or CATEGORICAL


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature declarations; the arity contract for every vector."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self) -> None:
        if not self.features:
            raise ValueError("schema needs at least one feature")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        for f in self.features:
            if f.kind not in (NUMERIC, CATEGORICAL):
                raise ValueError(f"unknown feature kind: {f.kind!r}")

    @property
    def k(self) -> int:
        return len(self.features)

    def kinds(self) -> tuple[str, ...]:
        return tuple(f.kind for f in self.features)

    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)


def schema(kinds: Sequence[str], names: Sequence[str] | None = None) -> FeatureSchema:
    """Build a schema from a list of kinds, naming features f0, f1, ... by default."""
    if names is None:
        names = [f"f{i}" for i in range(len(kinds))]
    return FeatureSchema(tuple(FeatureSpec(n, k) for n, k in zip(names, kinds)))


def _check_value(v: Value, kind: str) -> None:
    if v is MISSING:
        return
    if isinstance(v, bool):
        raise TypeError("bool is not a feature value")
    if kind == NUMERIC:
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValueError(f"numeric value must be finite, got {v!r}")
    else:
        if not isinstance(v, int):
            raise ValueError(f"categorical value must be a symbol id, got {v!r}")


@dataclass(frozen=True)
class Dataset:
    """Labeled rows conforming to a schema. Immutable once built."""

    schema: FeatureSchema
    rows: tuple[tuple[FeatureVector, int], ...]

    def __post_init__(self) -> None:
        kinds = self.schema.kinds()
        k = self.schema.k
        for x, y in self.rows:
            if len(x) != k:
                raise ValueError(f"row arity {len(x)} != schema arity {k}")
            if y not in (0, 1):
                raise ValueError(f"label must be 0 or 1, got {y!r}")
            for v, kind in zip(x, kinds):
                _check_value(v, kind)

    def __len__(self) -> int:
        return len(self.rows)

    def vectors(self) -> list[FeatureVector]:
        return [x for x, _ in self.rows]

    def labels(self) -> list[int]:
        return [y for _, y in self.rows]

    def with_rows(self, rows: Iterable[tuple[FeatureVector, int]]) -> "Dataset":
        return Dataset(self.schema, tuple(rows))


def project(x: FeatureVector, s: Iterable[int]) -> FeatureVector:
    """Keep the values at indices in s, withholding every other slot."""
    keep = frozenset(s)
    for i in keep:
        if not 0 <= i < len(x):
            raise IndexError(f"feature index {i} out of range for arity {len(x)}")
    return tuple(v if i in keep else MISSING for i, v in enumerate(x))


def can_report(x: FeatureVector, x2: FeatureVector) -> bool:
    """True iff x2 is a projection of x: no value invented, only withheld."""
    if len(x) != len(x2):
        raise ValueError("schema mismatch: vectors differ in arity")
    return all(b is MISSING or b == a for a, b in zip(x, x2))


def present_indices(x: FeatureVector) -> list[int]:
    return [i for i, v in enumerate(x) if v is not MISSING]


def iter_reachable(x: FeatureVector, limit: int = ENUMERATION_LIMIT) -> Iterator[FeatureVector]:
    """Yield every report reachable from x, ordered by keep-set bitmask ascending.

    Bit j of the mask keeps the j-th present feature; mask 0 is the all-withheld
    vector and the full mask is x itself.
    """
    present = present_indices(x)
    p = len(present)
    if p > limit:
        raise LatticeTooLargeError(f"{p} present features exceed enumeration limit {limit}")
    base: list[Value] = [MISSING] * len(x)
    for mask in range(1 << p):
        vec = base.copy()
        m = mask
        j = 0
        while m:
            if m & 1:
                i = present[j]
                vec[i] = x[i]
            m >>= 1
            j += 1
        yield tuple(vec)


def reachable_set(x: FeatureVector, limit: int = ENUMERATION_LIMIT) -> list[FeatureVector]:
    """All 2^p reports reachable from x, in deterministic bitmask order."""
    return list(iter_reachable(x, limit))


# ---------------------------------------------------------------------------
# Preprocessing transforms


def shift_nonnegative(train: Dataset) -> tuple[tuple[float | None, ...], Dataset]:
    """Shift each numeric feature by its observed train minimum.

    Returns (offsets, shifted dataset). offsets[i] is None for categorical
    features and for numeric features with no observed values. Replay on test
    rows with apply_shift, which clamps below-minimum values to 0.
    """
    kinds = train.schema.kinds()
    offsets: list[float | None] = [None] * train.schema.k
    for i, kind in enumerate(kinds):
        if kind != NUMERIC:
            continue
        seen = [x[i] for x, _ in train.rows if x[i] is not MISSING]
        if seen:
            offsets[i] = float(min(seen))
    off = tuple(offsets)
    shifted = train.with_rows((apply_shift(x, off), y) for x, y in train.rows)
    return off, shifted


def apply_shift(x: FeatureVector, offsets: tuple[float | None, ...]) -> FeatureVector:
    """Replay a nonnegative shift; values below the train minimum clamp to 0."""
    out = list(x)
    for i, o in enumerate(offsets):
        if o is None or out[i] is MISSING:
            continue
        out[i] = max(float(out[i]) - o, 0.0)
    return tuple(out)


@dataclass(frozen=True)
class InversionTransform:
    """Appended copies x' = lambda - x, linked to their source features.

    Copy j (feature index k + j in the augmented schema) is derived from
    sources[j]; a withheld source withholds its copy, so the two can never be
    reported independently.
    """

    sources: tuple[int, ...]
    lams: tuple[float, ...]

    def apply_vector(self, x: FeatureVector) -> FeatureVector:
        extra: list[Value] = []
        for src, lam in zip(self.sources, self.lams):
            v = x[src]
            # clamp: values above the observed train max must not go negative
            extra.append(MISSING if v is MISSING else max(lam - float(v), 0.0))
        return x + tuple(extra)

    def apply(self, data: Dataset, schema_out: FeatureSchema) -> Dataset:
        return Dataset(schema_out, tuple((self.apply_vector(x), y) for x, y in data.rows))


def invert_features(train: Dataset, which: Iterable[int]) -> tuple[InversionTransform, Dataset]:
    """Append an inverted copy lambda - v for each feature index in `which`.

    lambda is the feature's observed train maximum. Requires numeric,
    already-nonnegative features (run shift_nonnegative first).
    """
    kinds = train.schema.kinds()
    sources = tuple(sorted(set(which)))
    lams: list[float] = []
    for i in sources:
        if not 0 <= i < train.schema.k:
            raise IndexError(f"feature index {i} out of range")
        if kinds[i] != NUMERIC:
            raise TypeError(f"cannot invert categorical feature {train.schema.features[i].name!r}")
        seen = [float(x[i]) for x, _ in train.rows if x[i] is not MISSING]
        if any(v < 0 for v in seen):
            raise ValueError(f"feature {train.schema.features[i].name!r} has negative values; shift first")
        lams.append(max(seen) if seen else 0.0)
    transform = InversionTransform(sources, tuple(lams))
    feats = list(train.schema.features)
    for i in sources:
        feats.append(FeatureSpec(train.schema.features[i].name + "~inv", NUMERIC))
    schema_out = FeatureSchema(tuple(feats))
    return transform, transform.apply(train, schema_out)


# ---------------------------------------------------------------------------
# MDLP discretization (recursive entropy-minimizing splits, MDL-gated)


def _entropy(counts: Sequence[int]) -> float:
    n = sum(counts)
    if n == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c:
            p = c / n
            h -= p * math.log2(p)
    return h


def discretize_mdlp(column: Iterable[tuple[Value, int]]) -> list[float]:
    """Supervised binary-split discretization of one numeric column.

    Splits recursively at the boundary minimizing weighted child entropy,
    accepting a split only when its information gain beats the minimum
    description length criterion. Missing entries are excluded. Ties between
    equal-entropy cuts break toward the smallest cut value. Returns sorted cut
    points; an empty list means the column stays whole.
    """
    pairs = sorted((float(v), int(y)) for v, y in column if v is not MISSING)
    if not pairs:
        return []
    # collapse to distinct values with per-class counts
    values: list[float] = []
    counts: list[list[int]] = []
    for v, y in pairs:
        if values and values[-1] == v:
            counts[-1][y] += 1
        else:
            values.append(v)
            counts.append([0, 0])
            counts[-1][y] += 1
    cuts: list[float] = []
    _mdlp_split(values, counts, 0, len(values), cuts)
    return sorted(cuts)


def _mdlp_split(values: list[float], counts: list[list[int]], lo: int, hi: int, out: list[float]) -> None:
    if hi - lo < 2:
        return
    total = [0, 0]
    for i in range(lo, hi):
        total[0] += counts[i][0]
        total[1] += counts[i][1]
    n = total[0] + total[1]
    parent_h = _entropy(total)
    best = None  # (weighted child entropy, cut value, split index, left counts)
    left = [0, 0]
    for i in range(lo, hi - 1):
        left[0] += counts[i][0]
        left[1] += counts[i][1]
        right = [total[0] - left[0], total[1] - left[1]]
        nl = left[0] + left[1]
        nr = right[0] + right[1]
        w = (nl * _entropy(left) + nr * _entropy(right)) / n
        cut = (values[i] + values[i + 1]) / 2.0
        # strict < keeps the smallest-cut winner among exact entropy ties
        if best is None or w < best[0]:
            best = (w, cut, i + 1, left.copy())
    if best is None:
        return
    w, cut, split, lcounts = best
    rcounts = [total[0] - lcounts[0], total[1] - lcounts[1]]
    gain = parent_h - w
    classes = sum(1 for c in total if c)
    cl = sum(1 for c in lcounts if c)
    cr = sum(1 for c in rcounts if c)
    delta = math.log2(3**classes - 2) - (
        classes * parent_h - cl * _entropy(lcounts) - cr * _entropy(rcounts)
    )
    threshold = (math.log2(n - 1) + delta) / n
    if gain <= threshold:
        return
    out.append(cut)
    _mdlp_split(values, counts, lo, split, out)
    _mdlp_split(values, counts, split, hi, out)


def bin_index(value: float, cuts: Sequence[float]) -> int:
    """Bin id for a value under sorted cuts; bin b covers (cuts[b-1], cuts[b]]."""
    return bisect_left(cuts, float(value))


def bin_apply(value: Value, cuts: Sequence[float]) -> tuple[Value, ...]:
    """One-hot encode a value into len(cuts)+1 bin indicators.

    A present value lights exactly one bin; a Missing value yields all-Missing
    indicators, so withholding the source feature withholds every bin.
    """
    width = len(cuts) + 1
    if value is MISSING:
        return (MISSING,) * width
    out = [0] * width
    out[bin_index(float(value), cuts)] = 1
    return tuple(out)
