import json

import numpy as np
import pytest

from aurisense.acquisition import default_cohort_config, simulate_cohort
from aurisense.analysis import (
    cluster_pipeline,
    concordance,
    kmeans,
    select_k_elbow,
    silhouette,
    sse_of,
)
from aurisense.errors import LabelError, ParameterError, UndefinedSilhouetteError
from conftest import adjusted_rand_index


def brute_force_sse(points, assignments, centers):
    """Independent summation of squared distances, point by point."""
    total = 0.0
    for x, c in zip(points, assignments):
        d = x - centers[c]
        total += float(np.dot(d, d))
    return total


def brute_force_silhouette(points, assignments):
    """Naive double-loop silhouette oracle following the three-case formula."""
    n = len(points)
    labels = list(assignments)
    out = np.zeros(n)
    clusters = sorted(set(labels))
    for i in range(n):
        same = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not same:
            out[i] = 0.0
            continue
        a = np.mean([np.linalg.norm(points[i] - points[j]) for j in same])
        b = np.inf
        for c in clusters:
            if c == labels[i]:
                continue
            other = [j for j in range(n) if labels[j] == c]
            b = min(b, np.mean([np.linalg.norm(points[i] - points[j]) for j in other]))
        if a < b:
            out[i] = 1 - a / b
        elif a == b:
            out[i] = 0.0
        else:
            out[i] = b / a - 1
    return out


# ----------------------------------------------------------------------
# k-means
# ----------------------------------------------------------------------

def test_kmeans_k_equals_m_zero_sse():
    rng = np.random.default_rng(0)
    points = rng.normal(size=(8, 3))
    res = kmeans(points, 8, restarts=4, seed=0)
    assert res.sse == pytest.approx(0.0, abs=1e-18)


def test_kmeans_two_separated_pairs():
    points = np.array([[0.0, 0.0], [0.2, 0.0], [10.0, 0.0], [10.2, 0.0]])
    res = kmeans(points, 2, restarts=4, seed=1)
    centers = sorted(res.centers[:, 0])
    assert centers[0] == pytest.approx(0.1)
    assert centers[1] == pytest.approx(10.1)


def test_kmeans_sse_matches_brute_force_oracle():
    rng = np.random.default_rng(5)
    for trial in range(20):
        m = int(rng.integers(10, 60))
        k = int(rng.integers(2, 6))
        points = rng.normal(size=(m, 3))
        res = kmeans(points, k, restarts=3, seed=trial)
        oracle = brute_force_sse(points, res.assignments, res.centers)
        assert res.sse == pytest.approx(oracle, abs=1e-9)
        assert sse_of(points, res.assignments, res.centers) == pytest.approx(oracle, abs=1e-9)


def test_kmeans_every_point_at_nearest_center():
    rng = np.random.default_rng(6)
    points = rng.normal(size=(50, 4))
    res = kmeans(points, 5, restarts=3, seed=2)
    d2 = ((points[:, None, :] - res.centers[None]) ** 2).sum(-1)
    np.testing.assert_array_equal(res.assignments, np.argmin(d2, axis=1))


def test_kmeans_deterministic():
    rng = np.random.default_rng(7)
    points = rng.normal(size=(40, 3))
    a = kmeans(points, 4, restarts=5, seed=9)
    b = kmeans(points, 4, restarts=5, seed=9)
    np.testing.assert_array_equal(a.assignments, b.assignments)
    np.testing.assert_array_equal(a.centers, b.centers)


def test_kmeans_handles_duplicate_points():
    points = np.zeros((6, 2))
    points[3:] = 1.0
    res = kmeans(points, 2, restarts=2, seed=0)
    assert res.sse == pytest.approx(0.0, abs=1e-18)


def test_kmeans_validation():
    with pytest.raises(ParameterError):
        kmeans(np.zeros((3, 2)), 4)
    with pytest.raises(ParameterError):
        kmeans(np.zeros((3, 2)), 2, restarts=0)


# ----------------------------------------------------------------------
# silhouette
# ----------------------------------------------------------------------

def test_silhouette_two_coincident_far_clusters():
    points = np.array([[0.0, 0.0]] * 3 + [[100.0, 0.0]] * 3)
    labels = [0, 0, 0, 1, 1, 1]
    s, mean = silhouette(points, labels)
    np.testing.assert_allclose(s, 1.0)
    assert mean == 1.0


def test_silhouette_equal_a_b_is_zero():
    # for the first point: a = 1 (one intra neighbor at distance 1) and
    # b = mean(1, 1) = 1 to the other cluster, so the middle case applies
    points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    labels = [0, 0, 1, 1]
    s, _ = silhouette(points, labels)
    assert s[0] == 0.0


def test_silhouette_singleton_convention():
    points = np.array([[0.0], [1.0], [50.0]])
    s, _ = silhouette(points, [0, 0, 1])
    assert s[2] == 0.0


def test_silhouette_requires_two_clusters():
    with pytest.raises(UndefinedSilhouetteError):
        silhouette(np.zeros((4, 2)), [0, 0, 0, 0])


def test_silhouette_matches_brute_force_oracle():
    rng = np.random.default_rng(8)
    for trial in range(15):
        m = int(rng.integers(8, 40))
        points = rng.normal(size=(m, 3))
        k = int(rng.integers(2, 5))
        labels = rng.integers(0, k, size=m)
        while len(set(labels.tolist())) < 2:
            labels = rng.integers(0, k, size=m)
        s, _ = silhouette(points, labels)
        oracle = brute_force_silhouette(points, labels)
        np.testing.assert_allclose(s, oracle, atol=1e-12)


# ----------------------------------------------------------------------
# elbow
# ----------------------------------------------------------------------

def test_elbow_hand_computed_example():
    res = select_k_elbow([100.0, 20.0, 18.0, 17.0, 16.0])
    assert res.k_star == 2
    assert res.warning is None


def test_elbow_linear_decline_ties_to_smallest_interior():
    res = select_k_elbow([50.0, 40.0, 30.0, 20.0, 10.0])
    assert res.k_star == 2


def test_elbow_non_monotone_warning():
    res = select_k_elbow([100.0, 20.0, 30.0, 10.0])
    assert res.warning is not None
    assert "K=2" in res.warning


def test_elbow_needs_three_points():
    with pytest.raises(ParameterError):
        select_k_elbow([10.0, 5.0])


def test_elbow_custom_ks():
    res = select_k_elbow([100.0, 20.0, 18.0, 17.0], ks=[1, 2, 3, 4])
    assert res.k_star == 2


# ----------------------------------------------------------------------
# pipeline + concordance
# ----------------------------------------------------------------------

def test_pipeline_noiseless_archetypes_perfect():
    cfg = default_cohort_config()
    cfg["noise"] = 0.0
    res = simulate_cohort(cfg, seed=2)
    rep = cluster_pipeline(res.rows, labels=res.labels, k_range=(2, 8),
                           restarts=6, seed=3)
    assert rep.k_star == 4
    assert adjusted_rand_index(res.archetype, rep.assignments) == pytest.approx(1.0)
    assert rep.silhouette_mean == pytest.approx(1.0, abs=1e-9)


def test_pipeline_report_json_deterministic():
    res = simulate_cohort(None, seed=4)
    r1 = cluster_pipeline(res.rows, labels=res.labels, seed=5)
    r2 = cluster_pipeline(res.rows, labels=res.labels, seed=5)
    assert r1.to_json() == r2.to_json()
    obj = json.loads(r1.to_json())
    assert set(obj) == {"k_star", "assignments", "centers", "sse_by_k",
                        "silhouette", "ev_ratios", "labels", "elbow_warning"}


def test_pipeline_sse_curve_starts_at_k1():
    res = simulate_cohort(None, seed=6)
    rep = cluster_pipeline(res.rows, labels=res.labels, seed=7)
    assert rep.sse_ks[0] == 1
    assert (np.diff(rep.sse_values) <= 1e-6 * rep.sse_values[0]).all()


def test_pipeline_raw_space_option():
    res = simulate_cohort(None, seed=8)
    rep = cluster_pipeline(res.rows, labels=res.labels, seed=9, space="raw")
    assert rep.k_star >= 2


def test_pipeline_validation():
    with pytest.raises(ParameterError):
        cluster_pipeline(np.ones((2, 4)))
    with pytest.raises(ParameterError):
        cluster_pipeline(np.ones((10, 4)) * -1.0)
    with pytest.raises(LabelError):
        cluster_pipeline(np.ones((10, 4)) + np.eye(10, 4), labels=["a"])


def test_concordance_counts():
    res = simulate_cohort(None, seed=10)
    rep = cluster_pipeline(res.rows, labels=res.labels, seed=11)
    con = concordance(rep)
    assert con.n_subjects == 30
    assert con.match_matrix.sum() == 30
    assert np.trace(con.match_matrix) == round(con.fraction * 30)


def test_concordance_off_diagonal_subject():
    class FakeReport:
        assignments = np.array([0, 1, 0, 0])
        centers = np.zeros((2, 3))
        labels = ("S1-L", "S1-R", "S2-L", "S2-R")

    con = concordance(FakeReport())
    assert con.fraction == 0.5
    assert con.match_matrix[0, 1] == 1  # S1: left in 0, right in 1


def test_concordance_unpaired_subject_raises():
    class FakeReport:
        assignments = np.array([0, 1, 0])
        centers = np.zeros((2, 3))
        labels = ("S1-L", "S1-R", "S2-L")

    with pytest.raises(LabelError):
        concordance(FakeReport())
