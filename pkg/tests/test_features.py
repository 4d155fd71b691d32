import math

import numpy as np
import pytest

from stratshield import (
    Dataset,
    LatticeTooLargeError,
    MISSING,
    apply_shift,
    bin_apply,
    bin_index,
    can_report,
    discretize_mdlp,
    invert_features,
    iter_reachable,
    present_indices,
    project,
    reachable_set,
    schema,
    shift_nonnegative,
)
from stratshield.features import FeatureSchema, FeatureSpec


def test_schema_basics():
    sch = schema(["numeric", "categorical"], ["age", "color"])
    assert sch.k == 2
    assert sch.names() == ("age", "color")
    assert sch.index_of("color") == 1
    with pytest.raises(KeyError):
        sch.index_of("missing_name")


def test_schema_rejects_duplicate_names():
    with pytest.raises(ValueError):
        schema(["numeric", "numeric"], ["a", "a"])


def test_schema_rejects_bad_kind():
    with pytest.raises(ValueError):
        FeatureSchema((FeatureSpec("a", "textual"),))


def test_dataset_validation():
    sch = schema(["numeric", "categorical"])
    Dataset(sch, (((1.0, 2), 1),))  # fine
    with pytest.raises(ValueError):
        Dataset(sch, (((1.0,), 1),))  # arity
    with pytest.raises(ValueError):
        Dataset(sch, (((1.0, 2), 2),))  # label
    with pytest.raises(ValueError):
        Dataset(sch, (((math.inf, 2), 0),))  # non-finite numeric
    with pytest.raises(ValueError):
        Dataset(sch, (((1.0, 2.5), 0),))  # non-integer categorical
    with pytest.raises(TypeError):
        Dataset(sch, (((True, 2), 0),))  # bool masquerading as numeric


def test_project_and_can_report():
    x = (1.0, 2.0, 3.0)
    assert project(x, {0, 2}) == (1.0, MISSING, 3.0)
    assert can_report(x, (1.0, MISSING, 3.0))
    assert can_report(x, x)
    assert not can_report(x, (1.0, 9.0, 3.0))
    assert not can_report((1.0, MISSING, 3.0), x)  # cannot invent a value
    with pytest.raises(IndexError):
        project(x, {5})
    with pytest.raises(ValueError):
        can_report(x, (1.0, 2.0))


def test_present_indices():
    assert present_indices((MISSING, 4.0, MISSING, 1.0)) == [1, 3]
    assert present_indices((MISSING, MISSING)) == []


def test_iter_reachable_order_and_count():
    x = (5.0, MISSING, 7.0)
    reports = list(iter_reachable(x))
    # mask ascending over the two present slots: {}, {0}, {2}, {0,2}
    assert reports == [
        (MISSING, MISSING, MISSING),
        (5.0, MISSING, MISSING),
        (MISSING, MISSING, 7.0),
        (5.0, MISSING, 7.0),
    ]
    assert reachable_set(x) == reports


def test_iter_reachable_respects_limit():
    x = tuple(float(i) for i in range(25))
    with pytest.raises(LatticeTooLargeError):
        list(iter_reachable(x, limit=20))
    # raising the limit lets it start yielding
    gen = iter_reachable(x, limit=25)
    assert next(gen) == tuple([MISSING] * 25)


def test_reachable_counts_over_random_vectors():
    rng = np.random.Generator(np.random.PCG64(11))
    for _ in range(25):
        k = int(rng.integers(1, 8))
        x = tuple(float(rng.integers(0, 5)) if rng.random() > 0.4 else MISSING for _ in range(k))
        p = len(present_indices(x))
        reports = list(iter_reachable(x))
        assert len(reports) == 2**p
        assert len(set(reports)) == 2**p
        assert all(can_report(x, r) for r in reports)


def test_shift_nonnegative():
    sch = schema(["numeric", "numeric", "categorical"])
    data = Dataset(
        sch,
        (
            ((-2.0, 5.0, 1), 0),
            ((4.0, MISSING, 0), 1),
            ((0.0, 7.0, MISSING), 1),
        ),
    )
    offsets, shifted = shift_nonnegative(data)
    assert offsets == (-2.0, 5.0, None)
    assert shifted.rows[0][0] == (0.0, 0.0, 1)
    assert shifted.rows[1][0] == (6.0, MISSING, 0)
    # below the training minimum clamps at zero instead of going negative
    assert apply_shift((-10.0, 4.0, 1), offsets) == (0.0, 0.0, 1)
    assert apply_shift((MISSING, 6.0, MISSING), offsets) == (MISSING, 1.0, MISSING)


def test_invert_features_appends_clamped_copies():
    sch = schema(["numeric", "categorical"], ["score", "color"])
    data = Dataset(sch, (((1.0, 0), 0), ((4.0, 1), 1), ((MISSING, 0), 1)))
    tf, augmented = invert_features(data, [0])
    assert augmented.schema.names() == ("score", "color", "score~inv")
    # lambda is the observed max: inverted value = max(4.0 - v, 0)
    assert augmented.rows[0][0] == (1.0, 0, 3.0)
    assert augmented.rows[1][0] == (4.0, 1, 0.0)
    assert augmented.rows[2][0] == (MISSING, 0, MISSING)
    # out-of-range at prediction time clamps instead of going negative
    assert tf.apply_vector((9.0, 1)) == (9.0, 1, 0.0)
    with pytest.raises(TypeError):
        invert_features(data, [1])  # categorical cannot be inverted


# --- MDLP discretization; small cases verified by hand ---


def test_mdlp_perfect_split_accepts_midpoint():
    # entropy gain 1.0 vs MDL threshold (log2(3) + log2(7) - 2)/4 ~= 0.598
    col = [(1.0, 0), (2.0, 0), (3.0, 1), (4.0, 1)]
    assert discretize_mdlp(col) == [2.5]


def test_mdlp_rejects_uninformative_split():
    col = [(1.0, 0), (2.0, 1), (3.0, 0), (4.0, 1)]
    assert discretize_mdlp(col) == []


def test_mdlp_recurses_into_both_sides():
    # 20-row pure blocks: the first split (gain 0.251, threshold ~0.148)
    # passes the MDL gate, and the recursion finds the second boundary
    lo = [(float(v), 0) for v in range(20)]
    mid = [(20.0 + v, 1) for v in range(20)]
    hi = [(40.0 + v, 0) for v in range(20)]
    assert discretize_mdlp(lo + mid + hi) == [19.5, 39.5]


def test_mdlp_gate_rejects_marginal_split():
    # same three-block shape at 10 rows per block: gain 0.251 loses to the
    # MDL threshold (log2(29) + Delta)/30 ~= 0.261, so no cut is kept
    lo = [(float(v), 0) for v in range(10)]
    mid = [(10.0 + v, 1) for v in range(10)]
    hi = [(20.0 + v, 0) for v in range(10)]
    assert discretize_mdlp(lo + mid + hi) == []


def test_mdlp_constant_or_single_label():
    assert discretize_mdlp([(1.0, 0), (1.0, 1), (1.0, 0)]) == []
    assert discretize_mdlp([(1.0, 1), (2.0, 1), (3.0, 1)]) == []
    assert discretize_mdlp([]) == []


def test_mdlp_handles_repeated_values():
    col = [(1.0, 0)] * 20 + [(1.0, 1)] * 2 + [(3.0, 1)] * 20 + [(3.0, 0)] * 2
    cuts = discretize_mdlp(col)
    assert cuts == [2.0]


def test_bin_index_boundaries():
    cuts = (2.5, 7.5)
    assert bin_index(1.0, cuts) == 0
    assert bin_index(2.5, cuts) == 0  # bin covers (prev, cut]
    assert bin_index(2.6, cuts) == 1
    assert bin_index(7.5, cuts) == 1
    assert bin_index(100.0, cuts) == 2
    assert bin_index(5.0, ()) == 0


def test_bin_apply_one_hot():
    cuts = (2.5,)
    assert bin_apply(1.0, cuts) == (1, 0)
    assert bin_apply(3.0, cuts) == (0, 1)
    assert bin_apply(MISSING, cuts) == (MISSING, MISSING)
