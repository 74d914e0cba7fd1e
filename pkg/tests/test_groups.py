import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hglab import domains, groups
from hglab.errors import ExplosionGuard, NotBiproximal, NotCommuting
from hglab.hilbert import Geodesic

LOG2 = math.log(2.0)


def diag_lattice():
    return groups.GeneratorSet([np.diag([2.0, 1.0, 1.0]), np.diag([1.0, 2.0, 1.0])], names=["a", "b"])


def klein_setup(t=1.0):
    dom = domains.build_klein_null_disk()
    gens = groups.GeneratorSet([np.diag([math.exp(t), 1.0, math.exp(-t)])], names=["b"])
    x0 = np.array([1.0, 0.0, 1.0])
    ray = Geodesic(dom, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), origin=x0)
    return dom, gens, x0, ray


# ---------------------------------------------------------------- orbit balls


def test_orbit_ball_radius_zero_is_identity():
    ball = groups.orbit_ball(diag_lattice(), 0)
    assert len(ball) == 1 and ball[0].word == ()


def test_orbit_ball_lattice_counts_l1_ball():
    # lattice points of Z^2 with |u| + |v| <= 2
    assert len(groups.orbit_ball(diag_lattice(), 2)) == 13


def test_orbit_ball_dedups_inverse_generators():
    g = np.diag([2.0, 1.0, 0.5])
    gens = groups.GeneratorSet([g, np.linalg.inv(g)])
    words = groups.orbit_ball(gens, 2)
    exps = sorted(sum(e if i == 0 else -e for i, e in w.word) for w in words)
    assert exps == [-2, -1, 0, 1, 2]


def test_orbit_ball_negative_radius_rejected():
    with pytest.raises(ValueError):
        groups.orbit_ball(diag_lattice(), -1)


def test_orbit_ball_explosion_guard():
    with pytest.raises(ExplosionGuard):
        groups.orbit_ball(diag_lattice(), 10, cap=50)


def test_words_reproduce_maps(rng):
    gens = groups.GeneratorSet(domains.coxeter_generators((3, 3, 4), domains.symmetric_cartan_offdiag((3, 3, 4))),
                               orders=[2, 2, 2])
    V = rng.standard_normal((10, 3))
    for g in groups.orbit_ball(gens, 4):
        m = np.eye(3)
        for f in g.factors():
            m = m @ f
        a = V @ g.matrix.T
        b = V @ m.T
        scale = np.linalg.norm(b) / np.linalg.norm(a)
        assert np.allclose(a * scale, b, rtol=1e-8, atol=1e-8 * np.abs(b).max())


# ---------------------------------------------------------------- tracking


def test_klein_boost_tracking_is_exact():
    dom, gens, x0, ray = klein_setup()
    seq = groups.tracking_sequence(dom, gens, ray, x0, 10, L_max=12)
    assert [g.word for g in seq.elements] == [((0, n),) if n else () for n in range(11)]
    assert seq.achieved_R <= 1e-9


def test_tracking_length_zero_is_identity():
    dom, gens, x0, ray = klein_setup()
    seq = groups.tracking_sequence(dom, gens, ray, x0, 0, L_max=2)
    assert len(seq.elements) == 1 and seq.elements[0].word == ()


def test_simplex_lattice_tracking_within_quantization():
    dom = domains.build_simplex(2, 3)
    x0 = np.ones(3)
    ray = Geodesic.ray(dom, x0, np.array([1.0, 1.0, 0.0]))
    seq = groups.tracking_sequence(dom, diag_lattice(), ray, x0, 6, L_max=40)
    assert seq.achieved_R <= 0.5 * LOG2 + 1e-12
    assert seq.achieved_R == max(seq.residuals)


def test_tracking_is_deterministic():
    dom, gens, x0, ray = klein_setup()
    a = groups.tracking_sequence(dom, gens, ray, x0, 5, L_max=6)
    b = groups.tracking_sequence(dom, gens, ray, x0, 5, L_max=6)
    assert [g.word for g in a.elements] == [g.word for g in b.elements]
    assert a.residuals == b.residuals


# ---------------------------------------------------------------- biproximality


def test_biproximal_distinct_moduli():
    assert groups.biproximality_check(np.diag([8.0, 2.0, 0.5, 0.125]))["biproximal"]


def test_repeated_extremes_not_biproximal():
    assert not groups.biproximality_check(np.diag([2.0, 2.0, 0.5, 0.5]))["biproximal"]


def test_rotation_not_biproximal():
    c, s = math.cos(0.3), math.sin(0.3)
    assert not groups.biproximality_check(np.array([[c, -s], [s, c]]))["biproximal"]


# ---------------------------------------------------------------- flat directions and w_k


@pytest.fixture(scope="module")
def flat():
    gens = groups.counterexample_generators(7)
    return groups.flat_direction(gens, [1, 2])


def test_flat_direction_is_pure_a_power(flat):
    for n in range(0, 25):
        a_n = flat.a(n)
        assert a_n.length == n
        mu = groups.element_cartan(a_n)
        assert mu.gap(1, 2) == 0.0
        assert mu.gap(1, 4) == pytest.approx(2 * n * LOG2, abs=1e-12)
    assert flat.a(0).word == ()
    assert flat.C == 0.0


def test_flat_direction_rejects_noncommuting():
    gens = groups.GeneratorSet([np.diag([2.0, 1.0, 0.5]), np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])])
    with pytest.raises(NotCommuting):
        groups.flat_direction(gens, [0, 1])


def test_wk_builder_small_cases(flat):
    assert groups.wk_builder(0, flat, 0).word == ()
    w2 = groups.wk_builder(0, flat, 2)
    assert w2.word == tuple(flat.a(1).word) + ((0, 1),)
    assert w2.length == flat.a(1).length + 1


def test_wk_odd_step_quotient_is_flat_element(flat):
    for k in range(1, 16, 2):
        m = (k - 1) // 2
        q = groups.wk_builder(0, flat, k - 1).quotient(groups.wk_builder(0, flat, k))
        assert q.word == flat.a(m + 1).word
        mu = groups.element_cartan(q)
        assert mu.gap(1, 2) == 0.0
        assert mu.gap(1, 4) == pytest.approx(2 * (m + 1) * LOG2, abs=1e-12)


def test_wk_builder_requires_biproximal(flat):
    with pytest.raises(NotBiproximal):
        groups.wk_builder(1, flat, 2)


# ---------------------------------------------------------------- straightness and distance gaps


def test_straightness_klein_boosts_zero():
    _, gens, _, _ = klein_setup()
    seq = [groups.GroupElement.letter(gens, 0, n) for n in range(20)]
    assert abs(groups.straightness_residual(seq, 1)["D_hat"]) <= 1e-8


def test_straightness_constant_sequence_zero():
    gens = diag_lattice()
    seq = [groups.GroupElement.identity(gens)] * 6
    assert groups.straightness_residual(seq, 1)["D_hat"] == 0.0


def test_straightness_rejects_middle_gap():
    gens = groups.counterexample_generators(7)
    with pytest.raises(ValueError):
        groups.straightness_residual([groups.GroupElement.identity(gens)] * 3, 2)


def test_sv_distance_gap_klein_exact():
    dom, gens, x0, ray = klein_setup(0.7)
    seq = groups.tracking_sequence(dom, gens, ray, x0, 12, L_max=20, step=0.7)
    assert groups.sv_distance_gap(seq, dom)["max_abs"] <= 1e-9


def test_sv_distance_gap_simplex_diagonal_exact():
    dom = domains.build_simplex(2, 3)
    gens = groups.GeneratorSet([np.diag([2.0, 1.0, 0.5])])
    elems = [groups.GroupElement.letter(gens, 0, n) for n in range(15)]
    seq = groups.TrackingSequence(elems, np.ones(3), None, [0.0] * 15, 0.0)
    assert groups.sv_distance_gap(seq, dom)["max_abs"] <= 1e-9


def test_sv_distance_gap_identity():
    dom = domains.build_simplex(2, 3)
    seq = groups.TrackingSequence([groups.GroupElement.identity(diag_lattice())], np.ones(3), None, [0.0], 0.0)
    assert groups.sv_distance_gap(seq, dom)["max_abs"] == 0.0


def test_axis_growth_for_biproximal_generator():
    gens = groups.counterexample_generators(7)
    rep = groups.axis_growth_check(gens, 0, 20)
    assert rep["ok"] and rep["slope"] > 0
    ell = groups.log_eigen_moduli(gens.matrices[0])
    assert rep["slope"] == pytest.approx(ell[0] - ell[1], rel=0.05)


# ---------------------------------------------------------------- properties


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(-3, 3)), max_size=8))
def test_reduce_inverse_cancels(word):
    gens = diag_lattice()
    g = groups.GroupElement(gens, gens.reduce(word))
    assert (g * g.inverse()).word == ()
    assert g.quotient(g).word == ()


@given(st.integers(0, 12), st.integers(0, 12))
def test_diagonal_cartan_matches_arithmetic(u, v):
    gens = groups.counterexample_generators(7)
    g = groups.GroupElement(gens, gens.reduce([(1, u), (2, v)]))
    logs = np.sort(LOG2 * np.array([u + v, u - v, v - u, -u - v]))[::-1]
    assert np.allclose(groups.element_cartan(g).mu, logs, atol=1e-12)
