"""Empirical distribution over distinct feature vectors.

Positive/negative mass per canonical vector, stored as exact integer counts so
cut values and tie behavior are bit-exact downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .features import Dataset, FeatureSchema, FeatureVector

MAX_COMMON_DENOMINATOR = 10**6


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Map vector -> (pos_count, neg_count) with total mass. Immutable."""

    entries: dict[FeatureVector, tuple[int, int]]
    total: int
    schema: FeatureSchema | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        s = 0
        for x, (pos, neg) in self.entries.items():
            if pos < 0 or neg < 0:
                raise ValueError(f"negative count for {x!r}")
            s += pos + neg
        if s != self.total or self.total <= 0:
            raise ValueError(f"total {self.total} != sum of counts {s} (must be positive)")

    def pos(self, x: FeatureVector) -> int:
        return self.entries.get(x, (0, 0))[0]

    def neg(self, x: FeatureVector) -> int:
        return self.entries.get(x, (0, 0))[1]

    def pos_mass(self, x: FeatureVector) -> Fraction:
        return Fraction(self.pos(x), self.total)

    def neg_mass(self, x: FeatureVector) -> Fraction:
        return Fraction(self.neg(x), self.total)

    def support(self) -> list[FeatureVector]:
        return list(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def from_dataset(data: Dataset) -> EmpiricalDistribution:
    """Aggregate duplicate vectors into exact counts; total = number of rows."""
    if not data.rows:
        raise ValueError("empty dataset")
    entries: dict[FeatureVector, tuple[int, int]] = {}
    for x, y in data.rows:
        pos, neg = entries.get(x, (0, 0))
        if y == 1:
            pos += 1
        else:
            neg += 1
        entries[x] = (pos, neg)
    return EmpiricalDistribution(entries, len(data.rows), data.schema)


def _as_fraction(w) -> Fraction:
    if isinstance(w, float):
        # decimal intent: 0.1 means 1/10, not its binary expansion
        return Fraction(repr(w))
    return Fraction(w)


def from_weighted(
    entries,
    schema: FeatureSchema | None = None,
) -> EmpiricalDistribution:
    """Build from exact rational (pos_weight, neg_weight) pairs per vector.

    Weights are scaled by their least common denominator into integer counts.
    Accepts int, Fraction, or strings like "9/80"; floats are read as decimal
    literals. entries is either a mapping vector -> (pos, neg) or an iterable
    of (vector, pos, neg) triples.
    """
    if hasattr(entries, "items"):
        entries = [(x, p, n) for x, (p, n) in entries.items()]
    rats: list[tuple[FeatureVector, Fraction, Fraction]] = []
    for x, pw, nw in entries:
        p, n = _as_fraction(pw), _as_fraction(nw)
        if p < 0 or n < 0:
            raise ValueError(f"negative weight for {x!r}")
        rats.append((x, p, n))
    if not rats:
        raise ValueError("no entries")
    denom = 1
    for _, p, n in rats:
        denom = lcm(denom, p.denominator, n.denominator)
    if denom > MAX_COMMON_DENOMINATOR:
        raise ValueError(f"common denominator {denom} exceeds {MAX_COMMON_DENOMINATOR}")
    counts: dict[FeatureVector, tuple[int, int]] = {}
    total = 0
    for x, p, n in rats:
        pi = int(p * denom)
        ni = int(n * denom)
        prev = counts.get(x, (0, 0))
        counts[x] = (prev[0] + pi, prev[1] + ni)
        total += pi + ni
    return EmpiricalDistribution(counts, total, schema)
