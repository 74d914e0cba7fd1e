"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL
line (also collected into the terminal summary)."""

import filecmp
import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from hglab import cli, domains, groups, hilbert, regularity
from hglab.projlin import cartan, cartan_of_product, exterior_power_norm_check
from hglab.scenarios import (
    Coxeter334Scenario,
    CounterexampleScenario,
    KleinScenario,
    SegmentRescaleScenario,
    SimplexScenario,
)

LOG2 = math.log(2.0)


def verdict(label: str, title: str, ok: bool, detail: str, seconds: float, budget: float):
    ok = bool(ok) and seconds < budget
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}; {seconds:.1f} s of {budget:g} s]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def coxeter():
    t0 = time.perf_counter()
    scen = Coxeter334Scenario(seed=0, horizons={"N": 30})
    return scen, time.perf_counter() - t0


@pytest.fixture(scope="module")
def klein():
    t0 = time.perf_counter()
    scen = KleinScenario(seed=1)
    return scen, time.perf_counter() - t0


def test_criterion_01_hilbert_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n = 1000
    disk = domains.build_klein_ball(3)
    r = rng.uniform(0, 0.999, n)
    th = rng.uniform(0, 2 * np.pi, n)
    Y = np.column_stack([r * np.cos(th), r * np.sin(th), np.ones(n)])
    X = np.tile([0.0, 0.0, 1.0], (n, 1))
    err_k = np.max(np.abs(hilbert.hilbert_distances(disk, X, Y) - 0.5 * np.log((1 + r) / (1 - r))))
    simplex = domains.build_simplex(2, 3)
    A = np.exp(rng.uniform(-4, 4, (n, 3)))
    B = np.exp(rng.uniform(-4, 4, (n, 3)))
    # 1/2 max_{i,j} log(x_i y_j / (x_j y_i)) written out pairwise
    want = np.zeros(n)
    for i in range(3):
        for j in range(3):
            want = np.maximum(want, 0.5 * np.log(A[:, i] * B[:, j] / (A[:, j] * B[:, i])))
    err_s = np.max(np.abs(hilbert.hilbert_distances(simplex, A, B) - want))
    dt = time.perf_counter() - t0
    verdict("1", "Hilbert metric oracles", err_k <= 1e-9 and err_s <= 1e-9,
            f"disk err {err_k:.2e}, simplex err {err_s:.2e}", dt, 5)


def test_criterion_02_cartan_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2025)
    err_exact = 0.0
    for d in (2, 3, 4, 5):
        lam = np.exp(rng.uniform(-5, 5, d))
        want = np.sort(np.log(lam))[::-1]
        want -= want.mean()
        err_exact = max(err_exact, np.max(np.abs(cartan(np.diag(lam)).mu - want)))
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        err_exact = max(err_exact, np.max(np.abs(cartan(q @ np.diag(lam) @ q.T).mu - want)))
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
    mu60 = cartan_of_product([np.diag([2.0, 1.0, 0.5])] * 60).gap(1, 3)
    err60 = abs(mu60 - 120 * LOG2)
    dt = time.perf_counter() - t0
    verdict("2", "Cartan oracles", err_exact <= 1e-10 and worst <= 1e-6 and err60 <= 1e-6,
            f"exact {err_exact:.1e}, exterior {worst:.1e}, 60-fold {err60:.1e}", dt, 10)


def test_criterion_03_distance_vs_singular_gap(klein, coxeter):
    t0 = time.perf_counter()
    kscen, ksetup = klein
    k_dev = groups.sv_distance_gap(kscen.seq, kscen.dom)["max_abs"]
    simplex = domains.build_simplex(2, 3)
    gens = groups.GeneratorSet([np.diag([2.0, 1.0, 0.5])])
    x0 = np.ones(3)
    s_dev = 0.0
    for n in range(1, 31):
        g = groups.GroupElement.letter(gens, 0, n)
        s_dev = max(s_dev, abs(groups.element_cartan(g).gap(1, 3)
                                - 2 * hilbert.hilbert_distance(simplex, x0, g.apply(x0))))
    cscen, csetup = coxeter
    cox = groups.sv_distance_gap(cscen.seq, cscen.dom)
    slope = float(np.polyfit(np.arange(len(cox["values"])), cox["values"], 1)[0])
    dt = time.perf_counter() - t0 + ksetup + csetup
    # exact identities are asserted at round-off level
    ok = k_dev <= 1e-9 and s_dev <= 1e-9 and math.isfinite(cox["max_abs"]) and slope <= 1e-3
    verdict("3", "distance vs mu_{1,d}", ok,
            f"klein {k_dev:.1e}, simplex {s_dev:.1e}, coxeter max {cox['max_abs']:.3f} slope {slope:.1e}",
            dt, 120)


def test_criterion_04_straightness(klein, coxeter):
    t0 = time.perf_counter()
    kscen, ksetup = klein
    d_klein = groups.straightness_residual(kscen.seq, 1)["D_hat"]
    cscen, csetup = coxeter
    elems = cscen.seq.elements
    horizons = [20, 22, 24, 26, 28, 30]
    d_hat = [groups.straightness_residual(elems[:h + 1], 1)["D_hat"] for h in horizons]
    d_last = groups.straightness_residual(elems, 2)["D_hat"]
    rise = (d_hat[-1] - d_hat[0]) / (horizons[-1] - horizons[0])
    dt = time.perf_counter() - t0 + ksetup + csetup
    ok = abs(d_klein) <= 1e-8 and all(math.isfinite(v) for v in d_hat) and math.isfinite(d_last) and rise <= 1e-3
    verdict("4", "straightness residual", ok,
            f"klein {d_klein:.1e}, coxeter D_hat {d_hat[-1]:.4f} (i=2: {d_last:.4f}), tail rise {rise:.1e}/step",
            dt, 300)


def test_criterion_05_exponents(klein, coxeter):
    t0 = time.perf_counter()
    kscen, ksetup = klein
    sp = regularity.spectral_alpha_beta(kscen.seq)
    fit = regularity.boundary_graph_fit(kscen.chart)
    ok_a = (abs(sp["alpha0"] - 2) <= 1e-12 and abs(sp["beta0"] - 2) <= 1e-12
            and abs(fit.alpha_hat - 2) <= 0.05 and abs(fit.beta_hat - 2) <= 0.05)
    cscen, csetup = coxeter
    ell = groups.log_eigen_moduli(cscen.data.axis)
    target = (ell[0] - ell[2]) / (ell[0] - ell[1])
    csp = regularity.spectral_alpha_beta(cscen.axis_seq)
    cfit = regularity.boundary_graph_fit(cscen.chart)
    ok_b = abs(csp["alpha0"] - target) <= 1e-3 and abs(cfit.alpha_hat - csp["alpha0"]) <= 0.1
    dt = time.perf_counter() - t0 + ksetup + csetup
    verdict("5", "spectral vs boundary exponents", ok_a and ok_b,
            f"klein {sp['alpha0']:.6f}/{sp['beta0']:.6f} fit {fit.alpha_hat:.4f}/{fit.beta_hat:.4f}; "
            f"coxeter alpha0 {csp['alpha0']:.5f} eigen {target:.5f} fit {cfit.alpha_hat:.5f}", dt, 300)


def test_criterion_06_face_detection():
    t0 = time.perf_counter()
    res = SimplexScenario(seed=0).run(["face_detection"])
    rows = res.outputs["face_detection"].tables["face_detection"]
    ok = [r["k_from_gaps"] for r in rows] == [0, 1] and all(r["k_from_gaps"] == r["face_dimension"] for r in rows)
    verdict("6", "face detection from gaps", ok,
            ", ".join(f"{r['sequence']} k={r['k_from_gaps']} face={r['face_dimension']}" for r in rows),
            time.perf_counter() - t0, 10)


def test_criterion_07_counterexample():
    t0 = time.perf_counter()
    scen = CounterexampleScenario(seed=0)
    su = regularity.strong_uniform_stats(groups.letter_prefixes(scen.ws[-1]), 1, 5, min_ratio_only=True)
    witnesses = True
    for k in range(1, 42, 2):
        m = (k - 1) // 2
        r, q = regularity.quotient_ratio(scen.ws[k - 1], scen.ws[k], 1)
        witnesses &= r == 0.0 and q.word == scen.flat.a(m + 1).word
    ok_a = su["min_ratio"] == 0.0 and witnesses
    u1 = regularity.uniform_regularity_stats(scen.ws, 1, window=(20, 40))["ratio_min_tail"]
    u3 = regularity.uniform_regularity_stats(scen.ws, 3, window=(20, 40))["ratio_min_tail"]
    ok_b = u1 > 0.02 and u3 > 0.02
    # mu_{1,d} is subadditive, so the letter powers of w_k bound mu_{1,4}(w_k)
    ratios, within = [], True
    for k in range(1, 42):
        w = scen.ws[k]
        bound = sum(groups.element_cartan(groups.GroupElement(w.gens, (letter,))).gap(1, 4) for letter in w.word)
        mu14 = groups.element_cartan(w).gap(1, 4)
        within &= mu14 <= bound + 1e-9
        ratios.append(mu14 / k ** 2)
    upper = max(ratios)
    ok_c = within and math.isfinite(upper)
    dt = time.perf_counter() - t0
    verdict("7", "uniform but not strongly uniform", ok_a and ok_b and ok_c,
            f"strong min {su['min_ratio']}, odd witnesses {'exact' if witnesses else 'broken'}, "
            f"uniform k=1 {u1:.4f} k=3 {u3:.4f}, max mu14/k^2 {upper:.4f}", dt, 120)


def test_criterion_08_contraction_dichotomy(klein):
    t0 = time.perf_counter()
    kscen, _ = klein
    kout = kscen.diag_contraction()
    ratio = kout.reports["contraction"]["max_doubling_ratio"]
    sout = SimplexScenario(seed=0).diag_contraction()
    diam = sout.reports["contraction"]["diameters"]
    monotone = len(diam) >= 4 and all(b > a for a, b in zip(diam, diam[1:]))
    verdict("8", "contraction dichotomy", ratio < 1.5 and monotone,
            f"klein doubling ratio {ratio:.3f}, simplex diameters " + "/".join(f"{v:.2f}" for v in diam),
            time.perf_counter() - t0, 120)


def test_criterion_09_segment_rescale():
    t0 = time.perf_counter()
    out = SegmentRescaleScenario(seed=0).diag_rescale()
    rep = out.reports["rescale"]
    a, b = rep["final"], rep["final_doubled"]
    stable = abs(a - b) <= 0.1 * max(a, b)
    verdict("9", "rescaling limit is the simplex", a < 0.01 and stable,
            f"n=1e4 distance {a:.3e}, doubled samples {b:.3e}", time.perf_counter() - t0, 300)


def test_criterion_10_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = {"scenarios": [{"id": name, "seed": 0} for name in
                         ("klein", "simplex", "example51", "coxeter334", "graphp", "counterexample", "rescale36")]}
    p = tmp_path / "all.json"
    p.write_text(json.dumps(cfg))
    cli.run(p, parallel=True, out_dir=str(tmp_path / "a"))
    cli.run(p, parallel=True, out_dir=str(tmp_path / "b"))
    files_a = sorted(q.relative_to(tmp_path / "a") for q in (tmp_path / "a").rglob("*.csv"))
    files_b = sorted(q.relative_to(tmp_path / "b") for q in (tmp_path / "b").rglob("*.csv"))
    same = files_a == files_b and all(
        filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False) for f in files_a)
    verdict("10", "byte-identical CSV outputs", same and len(files_a) > 0,
            f"{len(files_a)} CSV files compared", time.perf_counter() - t0, 600)

