import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hglab import domains, groups, regularity
from hglab.errors import EmptyAnnulus, NotDivergent, TooShort
from hglab.hilbert import Geodesic
from hglab.projlin import ProjectivePoint


def klein_boosts(t=1.0, N=25):
    dom = domains.build_klein_null_disk()
    gens = groups.GeneratorSet([np.diag([math.exp(t), 1.0, math.exp(-t)])], names=["b"])
    x0 = np.array([1.0, 0.0, 1.0])
    ray = Geodesic(dom, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), origin=x0)
    cands = [groups.GroupElement.letter(gens, 0, j) for j in range(N + 2)]
    seq = groups.tracking_sequence(dom, gens, ray, x0, N, candidates=cands, step=t)
    return dom, ray, seq


def diag_powers(diag, N=20):
    gens = groups.GeneratorSet([np.diag(diag)])
    return [groups.GroupElement.letter(gens, 0, n) for n in range(N + 1)]


@pytest.fixture(scope="module")
def klein():
    return klein_boosts()


# ---------------------------------------------------------------- adapted chart


def test_klein_chart_graph_symmetric_with_zero_at_origin(klein):
    dom, ray, _ = klein
    chart = regularity.adapted_chart(dom, ray)
    assert chart.f(np.zeros((1, 1)))[0] == pytest.approx(0.0, abs=1e-15)
    x = np.linspace(0.01, 0.5, 30)[:, None]
    assert np.allclose(chart.f(x), chart.f(-x), rtol=1e-12)
    assert np.all(chart.f(x) > 0)


def test_klein_chart_height_decreases_along_rays(klein):
    dom, ray, _ = klein
    chart = regularity.adapted_chart(dom, ray)
    h = chart.height(np.logspace(-6, -0.5, 60)[:, None])
    assert np.all(np.diff(h) < 0)


def test_chart_rejects_interior_endpoints():
    from types import SimpleNamespace

    from hglab.errors import EndpointNotBoundary

    dom = domains.build_klein_ball(3)
    segment = SimpleNamespace(a=np.array([0.0, 0.0, 1.0]), b=np.array([0.5, 0.0, 1.0]), kappa=1.0)
    with pytest.raises(EndpointNotBoundary):
        regularity.adapted_chart(dom, segment)


def test_graph_domain_chart_follows_power_law():
    dom = domains.build_graph_domain(3.0)
    chart = regularity.chart_at_point(dom, ProjectivePoint([0.0, 0.0, 1.0]))
    x = np.logspace(-4, -2, 5)[:, None]
    ratio = chart.f(x) / x[:, 0] ** 3
    assert np.max(ratio) / np.min(ratio) < 1.01


# ---------------------------------------------------------------- boundary route


def test_klein_boundary_fit_is_two(klein):
    dom, ray, _ = klein
    fit = regularity.boundary_graph_fit(regularity.adapted_chart(dom, ray))
    assert abs(fit.alpha_hat - 2) <= 0.05
    assert abs(fit.beta_hat - 2) <= 0.05


def test_graph_domain_boundary_fit_is_p():
    dom = domains.build_graph_domain(3.0)
    fit = regularity.boundary_graph_fit(dom, ProjectivePoint([0.0, 0.0, 1.0]))
    assert abs(fit.alpha_hat - 3) <= 0.1
    assert abs(fit.beta_hat - 3) <= 0.1


def test_simplex_edge_point_has_infinite_beta():
    dom = domains.build_simplex(2, 3)
    fit = regularity.boundary_graph_fit(dom, ProjectivePoint([1.0, 1.0, 0.0]))
    assert fit.beta_hat == math.inf


def test_vertex_rejected_for_alpha():
    from hglab.errors import NotC1Point

    dom = domains.build_simplex(2, 3)
    with pytest.raises(NotC1Point):
        regularity.boundary_graph_fit(dom, ProjectivePoint([1.0, 0.0, 0.0]))


# ---------------------------------------------------------------- spectral route


def test_klein_spectral_exponents_exact(klein):
    sp = regularity.spectral_alpha_beta(klein[2])
    assert abs(sp["alpha0"] - 2) <= 1e-12
    assert abs(sp["beta0"] - 2) <= 1e-12


def test_simplex_diagonal_spectral_exponents():
    sp = regularity.spectral_alpha_beta(diag_powers([2.0, 1.0, 0.5]))
    assert sp["alpha0"] == pytest.approx(2.0, abs=1e-12)
    assert sp["beta0"] == pytest.approx(2.0, abs=1e-12)


def test_constant_sequence_not_divergent():
    with pytest.raises(NotDivergent):
        regularity.spectral_alpha_beta(diag_powers([1.0, 1.0, 1.0]))


def test_uniform_ratio_klein_half(klein):
    assert regularity.uniform_regularity_stats(klein[2], 1)["ratio_min_tail"] == pytest.approx(0.5, abs=1e-12)


def test_uniform_ratio_edge_sequence_zero():
    stats = regularity.uniform_regularity_stats(diag_powers([2.0, 2.0, 1.0]), 1)
    assert stats["ratio_min_tail"] == 0.0 and stats["divergent"]


def test_strong_uniform_klein_half(klein):
    su = regularity.strong_uniform_stats(klein[2], 1, 3)
    assert su["min_ratio"] == pytest.approx(0.5, abs=1e-12)
    finite = su["table"][np.isfinite(su["table"])]
    assert np.allclose(finite, 0.5, atol=1e-12)


def test_strong_uniform_counterexample_zero():
    gens = groups.counterexample_generators(7)
    flat = groups.flat_direction(gens, [1, 2])
    w = groups.wk_builder(0, flat, 11)
    su = regularity.strong_uniform_stats(groups.letter_prefixes(w), 1, 5, min_ratio_only=True)
    assert su["min_ratio"] == 0.0


def test_strong_uniform_too_short():
    seq = diag_powers([2.0, 1.0, 0.5], N=5)
    with pytest.raises(TooShort):
        regularity.strong_uniform_stats(seq, 1, len(seq) - 1)


# ---------------------------------------------------------------- envelope and faces


def test_klein_envelope_stable(klein):
    dom, ray, seq = klein
    rep = regularity.envelope_check(regularity.adapted_chart(dom, ray), seq, window=(5, 25))
    assert rep["stable"] and math.isfinite(rep["B"])


def test_envelope_empty_annulus_on_coarse_grid(klein):
    dom, ray, seq = klein
    with pytest.raises(EmptyAnnulus):
        regularity.envelope_check(regularity.adapted_chart(dom, ray), seq, window=(5, 25), per_decade=1)


def test_envelope_requires_tracking_sequence(klein):
    dom, ray, seq = klein
    with pytest.raises(TypeError):
        regularity.envelope_check(regularity.adapted_chart(dom, ray), list(seq.elements))


@pytest.mark.parametrize("diag, k", [([2.0, 1.0, 0.5], 0), ([2.0, 2.0, 1.0], 1)])
def test_face_dimension_matches_face_of(diag, k):
    assert regularity.face_dimension_from_gaps(diag_powers(diag)) == k
    limit = [1.0, 0.0, 0.0] if k == 0 else [1.0, 1.0, 0.0]
    assert domains.build_simplex(2, 3).face_of(ProjectivePoint(limit)).dimension == k


def test_face_dimension_klein(klein):
    assert regularity.face_dimension_from_gaps(klein[2]) == 0


# ---------------------------------------------------------------- properties


@given(st.floats(0.2, 3.0), st.floats(-3.0, 3.0))
def test_spectral_ratios_ignore_scalar_rescaling(t, s):
    base = diag_powers([math.exp(t), 1.0, math.exp(-t / 2)], N=12)
    scaled_gens = groups.GeneratorSet([math.exp(s) * np.diag([math.exp(t), 1.0, math.exp(-t / 2)])])
    scaled = [groups.GroupElement.letter(scaled_gens, 0, n) for n in range(13)]
    a = regularity.spectral_alpha_beta(base)
    b = regularity.spectral_alpha_beta(scaled)
    assert a["alpha0"] == pytest.approx(b["alpha0"], rel=1e-12)
    assert a["beta0"] == pytest.approx(b["beta0"], rel=1e-12)
