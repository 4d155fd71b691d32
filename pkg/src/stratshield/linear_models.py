"""Full-batch logistic regression and its incentive-compatible variant.

The incentive-compatible trainer projects feature coefficients to >= 0 after
every gradient step. Combined with a nonnegative encoding where a withheld
feature contributes exactly 0, no agent can raise their score by dropping
values, so the model is truthful by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .features import (
    MISSING,
    NUMERIC,
    Dataset,
    FeatureSchema,
    FeatureSpec,
    FeatureVector,
)

SCALED = "scaled"
INVERTED = "inverted"
INDICATOR = "indicator"


class TrainingDivergedError(RuntimeError):
    """Raised when the loss or gradient stops being finite (learning rate too large)."""


def sigmoid(t):
    """Logistic function, numerically stable for large |t|; accepts scalars or arrays."""
    scalar = np.ndim(t) == 0
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    e = np.exp(arr[~pos])
    out[~pos] = e / (1.0 + e)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent settings shared by the logistic trainers.

    learning_rate applies to the mean log-loss gradient; schedule is
    "constant" or "inv_sqrt" (rate/sqrt(epoch)). Training stops when an
    epoch improves the mean log-loss by at most stop_threshold, or at
    max_epochs. seed is reserved; descent itself is deterministic.
    """

    learning_rate: float = 0.1
    schedule: str = "constant"
    max_epochs: int = 2000
    stop_threshold: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max epochs must be >= 1")
        if self.schedule not in ("constant", "inv_sqrt"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.stop_threshold < 0:
            raise ValueError("stop threshold must be >= 0")


# ---------------------------------------------------------------------------
# Encoding raw vectors into nonnegative design columns


@dataclass(frozen=True)
class CodecColumn:
    """One design-matrix column derived from a source feature.

    kinds: scaled    max(v - offset, 0) / scale        (numeric)
           inverted  max(lam - scaled(v), 0)           (numeric copy)
           indicator 1.0 if v == symbol else 0.0       (categorical)
    A Missing source value always encodes to 0.
    """

    name: str
    source: int
    kind: str
    offset: float = 0.0
    scale: float = 1.0
    lam: float = 0.0
    symbol: int = -1


@dataclass(frozen=True)
class FeatureCodec:
    """Train-time feature transform replayed at prediction time.

    Numeric features are shifted by their train minimum and scaled by their
    train range into [0,1] (test values clamp below at 0). Categorical features
    one-hot over the symbols observed in training. Inverted copies are linked
    to their source: withholding the source zeroes the copy too.
    """

    schema: FeatureSchema
    columns: tuple[CodecColumn, ...]

    @classmethod
    def fit(cls, train: Dataset, invert: bool = False) -> "FeatureCodec":
        cols: list[CodecColumn] = []
        for i, spec in enumerate(train.schema.features):
            seen = [x[i] for x, _ in train.rows if x[i] is not MISSING]
            if spec.kind == NUMERIC:
                if seen:
                    lo = float(min(seen))
                    hi = float(max(seen))
                    scale = hi - lo if hi > lo else 1.0
                else:
                    lo, hi, scale = 0.0, 0.0, 1.0
                cols.append(CodecColumn(spec.name, i, SCALED, offset=lo, scale=scale))
                if invert:
                    lam = (hi - lo) / scale if seen else 0.0
                    cols.append(
                        CodecColumn(spec.name + "~inv", i, INVERTED, offset=lo, scale=scale, lam=lam)
                    )
            else:
                for sym in sorted(set(seen)):
                    cols.append(CodecColumn(f"{spec.name}={sym}", i, INDICATOR, symbol=int(sym)))
        return cls(train.schema, tuple(cols))

    def encode_value(self, col: CodecColumn, v) -> float:
        if v is MISSING:
            return 0.0
        if col.kind == INDICATOR:
            return 1.0 if v == col.symbol else 0.0
        scaled = max(float(v) - col.offset, 0.0) / col.scale
        if col.kind == SCALED:
            return scaled
        return max(col.lam - scaled, 0.0)

    def encode(self, x: FeatureVector) -> np.ndarray:
        return np.array([self.encode_value(c, x[c.source]) for c in self.columns], dtype=float)

    def encode_rows(self, vectors: Sequence[FeatureVector]) -> np.ndarray:
        if not vectors:
            return np.zeros((0, len(self.columns)))
        return np.vstack([self.encode(x) for x in vectors])

    def restrict(self, features: Iterable[int]) -> "FeatureCodec":
        """Keep only columns sourced from the given feature indices."""
        keep = frozenset(features)
        return FeatureCodec(self.schema, tuple(c for c in self.columns if c.source in keep))

    def column_indices(self, features: Iterable[int]) -> list[int]:
        keep = frozenset(features)
        return [j for j, c in enumerate(self.columns) if c.source in keep]


# ---------------------------------------------------------------------------
# Model and trainers


@dataclass(frozen=True)
class LinearModel:
    """Intercept + one coefficient per codec column; scores raw vectors."""

    codec: FeatureCodec
    intercept: float
    coefficients: np.ndarray

    @property
    def truthful(self) -> bool:
        # nonneg coefficients over a nonneg missing-as-zero encoding:
        # withholding can only lower the score
        return bool(np.all(self.coefficients >= 0))

    def score(self, x: FeatureVector) -> float:
        return score(self, x)

    def predict(self, x: FeatureVector) -> int:
        return 1 if score(self, x) >= 0 else 0

    def predict_proba(self, x: FeatureVector) -> float:
        return float(sigmoid(score(self, x)))


def score(model: LinearModel, x: FeatureVector) -> float:
    """Linear score of a raw vector; withheld features contribute zero."""
    return float(model.intercept + model.codec.encode(x) @ model.coefficients)


def mean_log_loss(intercept: float, coefficients: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean logistic loss; softplus(s) - y*s is stable for both signs of s."""
    s = intercept + X @ coefficients
    return float(np.mean(np.logaddexp(0.0, s) - y * s))


def log_loss_and_gradient(
    intercept: float, coefficients: np.ndarray, X: np.ndarray, y: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """Mean logistic loss and its analytic gradient at the given parameters."""
    s = intercept + X @ coefficients
    loss = float(np.mean(np.logaddexp(0.0, s) - y * s))
    r = sigmoid(s) - y
    g0 = float(np.mean(r))
    g = (X.T @ r) / len(y)
    return loss, g0, g


def gradient_descent(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    nonneg: bool = False,
    clamp_intercept: bool = False,
) -> tuple[float, np.ndarray, int]:
    """Full-batch descent from zero; returns (intercept, coefficients, epochs run).

    With nonneg=True, feature coefficients are clamped to >= 0 after every step
    (the incentive-compatible projection); clamp_intercept extends the clamp to
    the intercept.
    """
    m, d = X.shape
    if m == 0:
        raise ValueError("empty training matrix")
    b0 = 0.0
    w = np.zeros(d)
    prev = math.inf
    epochs = 0
    for epoch in range(1, cfg.max_epochs + 1):
        rate = cfg.learning_rate
        if cfg.schedule == "inv_sqrt":
            rate /= math.sqrt(epoch)
        loss, g0, g = log_loss_and_gradient(b0, w, X, y)
        if not (math.isfinite(loss) and math.isfinite(g0) and np.all(np.isfinite(g))):
            raise TrainingDivergedError(f"non-finite loss/gradient at epoch {epoch}")
        b0 -= rate * g0
        w -= rate * g
        if nonneg:
            np.maximum(w, 0.0, out=w)
            if clamp_intercept:
                b0 = max(b0, 0.0)
        epochs = epoch
        cur = mean_log_loss(b0, w, X, y)
        if not math.isfinite(cur):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        if prev - cur <= cfg.stop_threshold:
            break
        prev = cur
    return b0, w, epochs


def _as_matrix(train: Dataset, codec: FeatureCodec) -> tuple[np.ndarray, np.ndarray]:
    X = codec.encode_rows(train.vectors())
    y = np.array(train.labels(), dtype=float)
    return X, y


def train_logistic(
    train: Dataset, cfg: TrainConfig | None = None, codec: FeatureCodec | None = None
) -> LinearModel:
    """Plain logistic regression on the nonnegative missing-as-zero encoding."""
    cfg = cfg or TrainConfig()
    codec = codec or FeatureCodec.fit(train)
    X, y = _as_matrix(train, codec)
    b0, w, _ = gradient_descent(X, y, cfg)
    return LinearModel(codec, b0, w)


def train_iclr(
    train: Dataset,
    cfg: TrainConfig | None = None,
    invert: bool = True,
    clamp_intercept: bool = False,
    codec: FeatureCodec | None = None,
) -> LinearModel:
    """Incentive-compatible logistic regression.

    Identical to train_logistic except every step projects feature
    coefficients to >= 0, so the trained model is truthful. invert adds a
    linked descending copy of each numeric feature, letting the model express
    negative correlations without negative coefficients. clamp_intercept also
    projects the intercept (off by default; truthfulness never needs it).
    """
    cfg = cfg or TrainConfig()
    codec = codec or FeatureCodec.fit(train, invert=invert)
    X, y = _as_matrix(train, codec)
    b0, w, _ = gradient_descent(X, y, cfg, nonneg=True, clamp_intercept=clamp_intercept)
    return LinearModel(codec, b0, w)


# ---------------------------------------------------------------------------
# Plain-text serialization (exact float round trip via repr)


def _fmt(v: float) -> str:
    return repr(float(v))


def _codec_lines(codec: FeatureCodec) -> list[str]:
    for spec in codec.schema.features:
        if "\n" in spec.name or " name=" in spec.name:
            raise ValueError(f"feature name {spec.name!r} cannot be serialized")
    lines = [f"schema {codec.schema.k}"]
    for i, spec in enumerate(codec.schema.features):
        lines.append(f"feature {i} {spec.kind} {spec.name}")
    lines.append(f"codec {len(codec.columns)}")
    for j, c in enumerate(codec.columns):
        lines.append(
            f"col {j} {c.kind} source={c.source} offset={_fmt(c.offset)} "
            f"scale={_fmt(c.scale)} lam={_fmt(c.lam)} symbol={c.symbol} name={c.name}"
        )
    return lines


def _linear_lines(model: LinearModel) -> list[str]:
    lines = _codec_lines(model.codec)
    lines.append(f"intercept {_fmt(model.intercept)}")
    for j, w in enumerate(model.coefficients):
        lines.append(f"coef {j} {_fmt(w)}")
    return lines


def save_model(model, path: str | None = None) -> str:
    """Serialize a linear model or max ensemble to plain key-value text."""
    from .hc_ensemble import MaxEnsemble  # local import avoids a cycle

    lines = ["stratshield-model v1"]
    if isinstance(model, LinearModel):
        lines.append("type linear")
        lines += _linear_lines(model)
    elif isinstance(model, MaxEnsemble):
        lines.append("type max-ensemble")
        lines.append(f"members {len(model.members)}")
        for i, member in enumerate(model.members):
            feats = ",".join(str(f) for f in sorted(member.feature_set))
            lines.append(f"member {i} features {feats}")
            if member.inner is None:
                lines.append("reject")
            else:
                lines += _linear_lines(member.inner)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    lines.append("end")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


class _LineReader:
    def __init__(self, text: str):
        self.lines = [ln for ln in text.splitlines() if ln.strip()]
        self.pos = 0

    def peek(self) -> str:
        return self.lines[self.pos]

    def next(self) -> str:
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect(self, prefix: str) -> str:
        line = self.next()
        if not line.startswith(prefix):
            raise ValueError(f"expected {prefix!r}, got {line!r}")
        return line


def _parse_linear(r: _LineReader) -> LinearModel:
    k = int(r.expect("schema").split()[1])
    feats = []
    for _ in range(k):
        _, _, kind, name = r.expect("feature").split(maxsplit=3)
        feats.append(FeatureSpec(name, kind))
    schema = FeatureSchema(tuple(feats))
    ncols = int(r.expect("codec").split()[1])
    cols = []
    for _ in range(ncols):
        line = r.expect("col")
        head, name = line.split(" name=", 1)
        parts = head.split()
        kind = parts[2]
        kv = dict(p.split("=", 1) for p in parts[3:])
        cols.append(
            CodecColumn(
                name=name,
                source=int(kv["source"]),
                kind=kind,
                offset=float(kv["offset"]),
                scale=float(kv["scale"]),
                lam=float(kv["lam"]),
                symbol=int(kv["symbol"]),
            )
        )
    codec = FeatureCodec(schema, tuple(cols))
    intercept = float(r.expect("intercept").split()[1])
    coefs = np.zeros(ncols)
    for _ in range(ncols):
        _, j, v = r.expect("coef").split()
        coefs[int(j)] = float(v)
    return LinearModel(codec, intercept, coefs)


def load_model(text_or_path: str):
    """Inverse of save_model; accepts the text itself or a file path."""
    text = text_or_path
    if "\n" not in text_or_path and not text_or_path.startswith("stratshield-model"):
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    r = _LineReader(text)
    header = r.next()
    if header != "stratshield-model v1":
        raise ValueError(f"not a model file (header {header!r})")
    kind = r.expect("type").split()[1]
    if kind == "linear":
        return _parse_linear(r)
    if kind == "max-ensemble":
        from .hc_ensemble import MaxEnsemble, SubsetClassifier

        count = int(r.expect("members").split()[1])
        members = []
        for _ in range(count):
            line = r.expect("member")
            feats_part = line.split("features", 1)[1].strip()
            feature_set = frozenset(int(t) for t in feats_part.split(",") if t != "")
            if r.peek() == "reject":
                r.next()
                members.append(SubsetClassifier(feature_set, None))
            else:
                members.append(SubsetClassifier(feature_set, _parse_linear(r)))
        return MaxEnsemble(tuple(members), loss_trace=())
    raise ValueError(f"unknown model type {kind!r}")
