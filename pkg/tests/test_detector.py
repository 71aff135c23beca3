import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import chi2_contingency

from nsdrift.detector import (
    DetectorConfig,
    Verdict,
    check_direction,
    count_test,
    decide,
    detect_drift,
    estimate_gap,
    split_classes,
)
from nsdrift.errors import ClassMissing, DimensionMismatch, EmptySet, KTooLarge, NsdParamNonPositive
from nsdrift.nsd_stats import nsd_exact


def labeled_uniform(rng, n, d=2):
    x = rng.random((n, d))
    return x, (x.sum(axis=1) > d / 2).astype(int)


# -- estimate_gap / count_test ------------------------------------------------------


def test_disjoint_origins_pool_all_neighbors():
    ref = np.array([[0.0, i * 0.1] for i in range(10)] + [[100.0, i * 0.1] for i in range(10)])
    gap = estimate_gap([[0.0, 0.0], [100.0, 0.0]], ref, 10)
    assert gap.pooled_k1 == 20
    assert len(gap.radii) == 2


def test_identical_origins_share_neighbors():
    ref = np.random.default_rng(0).random((50, 2))
    gap = estimate_gap([[0.5, 0.5], [0.5, 0.5]], ref, 4)
    assert gap.pooled_k1 == 4


def test_pooled_k1_matches_set_union_oracle():
    rng = np.random.default_rng(11)
    origins, ref = rng.random((3, 2)), rng.random((30, 2))
    k = 6
    union = set()
    for o in origins:
        d = np.linalg.norm(ref - o, axis=1)
        union |= set(np.argsort(d, kind="stable")[:k].tolist())
    gap = estimate_gap(origins, ref, k)
    assert gap.pooled_k1 == len(union)
    assert k <= gap.pooled_k1 <= 3 * k


@settings(max_examples=40)
@given(arrays(float, (40, 2), elements=st.floats(0, 1), unique=True), st.integers(1, 5))
def test_replaying_reference_recovers_k1_minus_boundary(ref, k):
    # Each k-th neighbor sits on its own ball boundary, so replaying the reference
    # set can only lose those points (and never gain any beyond the pooled set).
    origins = np.array([[0.2, 0.2], [0.8, 0.7]])
    gap = estimate_gap(origins, ref, k)
    k2 = count_test(gap, ref)
    assert gap.pooled_k1 - len(origins) <= k2 <= gap.pooled_k1


def test_replay_generic_position_with_sub_k_neighbors():
    # With distinct distances the k-1 nearest of each origin are strictly inside.
    rng = np.random.default_rng(5)
    ref = rng.random((200, 2))
    origins = np.array([[0.5, 0.5]])
    gap = estimate_gap(origins, ref, 10)
    assert count_test(gap, ref) == 9


def test_count_test_edge_cases():
    gap = estimate_gap([[0.0, 0.0]], [[1.0, 0.0], [2.0, 0.0]], 1)
    assert count_test(gap, np.empty((0, 2))) == 0
    assert count_test(gap, [[5.0, 5.0], [-3.0, 0.0]]) == 0
    with pytest.raises(DimensionMismatch):
        count_test(gap, [[0.0, 0.0, 0.0]])


def test_estimate_gap_errors():
    with pytest.raises(KTooLarge):
        estimate_gap([[0, 0]], [[1, 1]], 2)
    with pytest.raises(EmptySet):
        estimate_gap(np.empty((0, 2)), [[1, 1]], 1)
    with pytest.raises(DimensionMismatch):
        estimate_gap([[0, 0]], [[1, 1, 1]], 1)


# -- decide -------------------------------------------------------------------------


def test_decide_balanced_is_no_drift():
    assert decide(20, 20, 0.05).verdict is Verdict.NO_DRIFT


def test_decide_empty_test_is_retreat():
    ev = decide(10, 0, 0.05)
    assert ev.verdict is Verdict.RETREAT
    assert ev.p_retreat == pytest.approx(0.5**10, rel=1e-12)


def test_decide_20_5():
    p = nsd_exact(20, 6)
    ev = decide(20, 5, 0.05)
    assert ev.p_retreat == pytest.approx(p, rel=1e-9)
    assert p == pytest.approx(0.002038658, rel=1e-6)
    assert ev.verdict is Verdict.RETREAT


def test_decide_10_30():
    p = 1 - nsd_exact(10, 30)
    ev = decide(10, 30, 0.05)
    assert ev.p_invasion == pytest.approx(p, rel=1e-6)
    assert p == pytest.approx(0.000532510, rel=1e-5)
    assert ev.verdict is Verdict.INVASION


@given(st.integers(1, 300), st.integers(0, 300), st.floats(0.001, 0.5), st.floats(0.0, 0.49))
def test_decide_monotone_in_theta(k1, k2, theta, extra):
    small = decide(k1, k2, theta)
    large = decide(k1, k2, min(theta + extra, 0.999))
    if small.verdict is not Verdict.NO_DRIFT:
        assert large.verdict is small.verdict
    assert 0 <= small.p_retreat <= 1 and 0 <= small.p_invasion <= 1
    if small.verdict is Verdict.RETREAT:
        assert k1 > k2
    if small.verdict is Verdict.INVASION:
        assert k1 < k2


def test_decide_rejects_bad_input():
    with pytest.raises(NsdParamNonPositive):
        decide(0, 3, 0.05)
    with pytest.raises(ValueError):
        decide(3, 3, 1.5)


# -- detect_drift -------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100))
def test_scale_invariance(seed, scale):
    rng = np.random.default_rng(seed)
    x1, y1 = labeled_uniform(rng, 300)
    x2, y2 = labeled_uniform(rng, 300)
    cfg = DetectorConfig(k=3)
    a = detect_drift(x1, y1, x2, y2, cfg)
    b = detect_drift(x1 * scale, y1, x2 * scale, y2, cfg)
    assert (a.direction_minus.k1, a.direction_minus.k2) == (b.direction_minus.k1, b.direction_minus.k2)
    assert (a.direction_plus.k1, a.direction_plus.k2) == (b.direction_plus.k1, b.direction_plus.k2)
    assert a.drift_flag == b.drift_flag


def test_retreat_when_test_class_moves_away():
    rng = np.random.default_rng(2)
    x1, y1 = labeled_uniform(rng, 600)
    x2, y2 = labeled_uniform(rng, 600)
    x2 = x2.copy()
    x2[y2 == 0] -= 50.0
    rep = detect_drift(x1, y1, x2, y2, DetectorConfig(k=5))
    assert rep.direction_minus.k2 == 0
    assert rep.direction_minus.k1 >= 5
    assert rep.direction_minus.verdict is Verdict.RETREAT
    assert rep.drift_flag


def test_invasion_when_test_class_floods_gap():
    rng = np.random.default_rng(4)
    x1, y1 = labeled_uniform(rng, 600)
    x2, y2 = labeled_uniform(rng, 600)
    neg = y2 == 0
    # Put every new negative right on the class boundary, inside the gap balls.
    t = rng.random(neg.sum())
    x2 = x2.copy()
    x2[neg] = np.column_stack([t, 1 - t]) + rng.normal(0, 0.002, (neg.sum(), 2))
    rep = detect_drift(x1, y1, x2, y2, DetectorConfig(k=1))
    assert rep.direction_minus.k2 > rep.direction_minus.k1
    assert rep.direction_minus.verdict is Verdict.INVASION


def test_check_direction_roles():
    rng = np.random.default_rng(9)
    x1, y1 = labeled_uniform(rng, 400)
    x2, y2 = labeled_uniform(rng, 400)
    rep = detect_drift(x1, y1, x2, y2)
    pos1, neg1 = split_classes(x1, y1, 1)
    pos2, neg2 = split_classes(x2, y2, 1)
    assert check_direction(pos1, neg1, neg2, 1, 0.05) == rep.direction_minus
    assert check_direction(neg1, pos1, pos2, 1, 0.05) == rep.direction_plus


def test_class_missing():
    x = np.random.default_rng(0).random((20, 2))
    y = np.zeros(20, dtype=int)
    y[0] = 1
    with pytest.raises(ClassMissing):
        detect_drift(x, y, x, y, DetectorConfig(k=1))
    y[1] = 1
    detect_drift(x, y, x, y, DetectorConfig(k=1))
    with pytest.raises(ClassMissing):
        detect_drift(x, y, x, y, DetectorConfig(k=2))


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(k=0)
    with pytest.raises(ValueError):
        DetectorConfig(theta=0.0)


def test_swapping_windows_gives_same_verdict_distribution():
    counts = np.zeros((2, 3), dtype=int)
    cfg = DetectorConfig(k=1)
    for trial in range(500):
        rng = np.random.default_rng([trial, 77])
        x1, y1 = labeled_uniform(rng, 200)
        x2, y2 = labeled_uniform(rng, 200)
        for row, rep in enumerate((detect_drift(x1, y1, x2, y2, cfg), detect_drift(x2, y2, x1, y1, cfg))):
            for ev in (rep.direction_minus, rep.direction_plus):
                counts[row, int(ev.verdict)] += 1
    table = counts[:, counts.sum(axis=0) > 0]
    assert chi2_contingency(table).pvalue > 0.01
