import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hglab.errors import DegenerateQuadruple, EmptyProduct, IndexOutOfRange, NotCollinear, Singular
from hglab.projlin import (
    AffineChart,
    CartanVector,
    ProjectiveHyperplane,
    ProjectiveMap,
    ProjectivePoint,
    cartan,
    cartan_of_product,
    cross_ratio,
    exterior_power_norm_check,
    gaps_table,
    mu_gap,
)

LOG2 = math.log(2.0)


def line_point(s):
    return ProjectivePoint([s, 1.0])


def test_cross_ratio_hand_value():
    a, x, y, b = (line_point(s) for s in (0.0, 1.0, 2.0, 3.0))
    assert cross_ratio(a, b, x, y) == pytest.approx(4.0, abs=1e-12)


def test_cross_ratio_equal_inner_points():
    a, x, b = (line_point(s) for s in (0.0, 1.5, 3.0))
    assert cross_ratio(a, b, x, x) == pytest.approx(1.0, abs=1e-12)


def test_cross_ratio_rejects_non_collinear():
    pts = [ProjectivePoint(v) for v in np.eye(3)] + [ProjectivePoint([1, 1, 1])]
    with pytest.raises(NotCollinear):
        cross_ratio(*pts)


def test_cross_ratio_rejects_coincident_endpoint():
    a, b, y = (line_point(s) for s in (0.0, 3.0, 2.0))
    with pytest.raises(DegenerateQuadruple):
        cross_ratio(a, b, a, y)


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4, unique=True),
       st.integers(0, 10_000))
def test_cross_ratio_projective_invariance(vals, seed):
    s = sorted(vals)
    if min(np.diff(s)) < 1e-2:
        return
    rng = np.random.default_rng(seed)
    p0, p1 = rng.normal(size=3), rng.normal(size=3)
    pts = [p0 + t * p1 for t in s]
    g = rng.normal(size=(3, 3))
    if abs(np.linalg.det(g)) < 1e-2:
        return
    a, x, y, b = (ProjectivePoint(v) for v in pts)
    ga, gx, gy, gb = (ProjectivePoint(g @ v) for v in pts)
    assert cross_ratio(ga, gb, gx, gy) == pytest.approx(cross_ratio(a, b, x, y), rel=1e-9)


def test_projective_point_scale_and_sign():
    assert ProjectivePoint([1, 2, 3]) == ProjectivePoint([-2, -4, -6])
    assert ProjectivePoint([1, 2, 3]) != ProjectivePoint([1, 2, 3.1])


def test_hyperplane_contains():
    h = ProjectiveHyperplane([0, 0, 1])
    assert h.contains(ProjectivePoint([1, 1, 0]))
    assert not h.contains(ProjectivePoint([1, 1, 1]))


def test_map_rejects_singular():
    with pytest.raises(Singular):
        ProjectiveMap(np.diag([1.0, 0.0, 1.0]))


def test_affine_chart_round_trip():
    ch = AffineChart.standard(3)
    p = ch.from_chart([0.3, -0.2])
    assert np.allclose(ch.to_chart(p), [0.3, -0.2])


def test_cartan_identity():
    assert np.all(cartan(np.eye(4)).mu == 0)


def test_cartan_diagonal():
    mu = cartan(np.diag([4.0, 2.0, 1.0]))
    assert mu.gap(1, 2) == pytest.approx(LOG2, abs=1e-12)
    assert mu.gap(1, 3) == pytest.approx(2 * LOG2, abs=1e-12)
    assert abs(mu.mu.sum()) < 1e-12


def test_cartan_planar_boost():
    t = 1.0
    b = np.array([[math.cosh(t), 0, math.sinh(t)], [0, 1, 0], [math.sinh(t), 0, math.cosh(t)]])
    assert np.allclose(cartan(b).mu, [1.0, 0.0, -1.0], atol=1e-12)


def test_cartan_product_singleton_and_inverse(rng):
    g = rng.normal(size=(4, 4))
    assert np.allclose(cartan_of_product([g]).mu, cartan(g).mu)
    assert np.allclose(cartan_of_product([g, np.linalg.inv(g)]).mu, 0.0, atol=1e-6)


def test_cartan_product_long_diagonal():
    mu = cartan_of_product([np.diag([2.0, 1.0, 0.5])] * 60)
    assert mu.gap(1, 3) == pytest.approx(120 * LOG2, abs=1e-6)
    assert mu.gap(1, 2) == pytest.approx(60 * LOG2, abs=1e-6)


def test_cartan_product_empty():
    with pytest.raises(EmptyProduct):
        cartan_of_product([])


def test_mu_gap_edges():
    v = cartan(np.diag([4.0, 2.0, 1.0]))
    assert mu_gap(cartan(np.eye(3)), 1, 3) == 0
    assert mu_gap(v, 1, 2) == pytest.approx(LOG2)
    assert mu_gap(v, 2, 2) == 0
    with pytest.raises(IndexOutOfRange):
        mu_gap(v, 2, 1)
    with pytest.raises(IndexOutOfRange):
        mu_gap(v, 1, 4)


def test_cartan_vector_monotone():
    with pytest.raises(ValueError):
        CartanVector(np.array([0.0, 1.0]))


def test_gaps_table_keys():
    t = gaps_table(cartan(np.diag([4.0, 2.0, 1.0])))
    assert set(t) == {"mu_1_2", "mu_2_3", "mu_1_3"}


def test_exterior_power_top_is_det(rng):
    assert exterior_power_norm_check(rng.normal(size=(4, 4)), 4) == pytest.approx(0.0, abs=1e-12)


def test_exterior_power_diagonal():
    mu = cartan(np.diag([4.0, 2.0, 1.0]))
    assert exterior_power_norm_check(np.diag([4.0, 2.0, 1.0]), 2) == pytest.approx(mu.mu[0] + mu.mu[1])


@given(st.integers(0, 100_000), st.integers(2, 5))
def test_cartan_symmetric_matches_eigenvalues(seed, d):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    lam = np.exp(rng.uniform(-3, 3, d))
    m = q @ np.diag(lam) @ q.T
    want = np.sort(np.log(lam))[::-1]
    want -= want.mean()
    assert np.allclose(cartan(m).mu, want, atol=1e-10)


@given(st.integers(0, 100_000), st.integers(2, 5))
def test_cartan_invariant_under_orthogonal(seed, d):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d, d))
    k1, _ = np.linalg.qr(rng.normal(size=(d, d)))
    k2, _ = np.linalg.qr(rng.normal(size=(d, d)))
    assert np.allclose(cartan(k1 @ g @ k2).mu, cartan(g).mu, atol=1e-9)


@given(st.integers(0, 100_000), st.integers(2, 4))
def test_cartan_subadditive(seed, d):
    rng = np.random.default_rng(seed)
    g, h = rng.normal(size=(2, d, d))
    assert cartan(g @ h).mu[0] <= cartan(g).mu[0] + cartan(h).mu[0] + 1e-9


def test_exterior_power_cross_oracle(rng):
    worst = 0.0
    for i in range(1000):
        d = 3 + i % 3
        q1, _ = np.linalg.qr(rng.normal(size=(d, d)))
        q2, _ = np.linalg.qr(rng.normal(size=(d, d)))
        s = np.exp(np.sort(rng.uniform(0, math.log(1e12), d))[::-1])
        g = q1 @ np.diag(s) @ q2
        mu = cartan(g).mu
        for k in range(1, d):
            worst = max(worst, abs(exterior_power_norm_check(g, k) - mu[:k].sum()))
    assert worst <= 1e-6
