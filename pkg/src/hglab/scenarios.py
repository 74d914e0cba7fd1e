"""Built-in experiment scenarios.  Each scenario builds its objects once and
exposes named diagnostics that return CSV tables, JSON reports and checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hglab import benzecri, domains, groups, hilbert, regularity
from hglab.errors import ConfigInvalid
from hglab.projlin import ProjectivePoint

ASYMMETRIC_334 = (-2.0, -0.5, -1.0, -1.0, -math.sqrt(2.0), -math.sqrt(2.0))


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    detail: str = ""


@dataclass
class DiagnosticOutput:
    tables: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)


@dataclass
class ScenarioResult:
    id: str
    outputs: dict = field(default_factory=dict)  # diagnostic name -> DiagnosticOutput

    @property
    def checks(self) -> list:
        return [c for o in self.outputs.values() for c in o.checks]

    def report(self, diag: str, name: str) -> dict:
        return self.outputs[diag].reports[name]


class Scenario:
    id = ""
    description = ""
    defaults: dict = {}
    horizon_defaults: dict = {}
    tolerance_defaults: dict = {}

    def __init__(self, params=None, seed: int = 0, horizons=None, tolerances=None):
        self.params = {**self.defaults, **(params or {})}
        unknown = set(self.params) - set(self.defaults)
        if unknown:
            raise ConfigInvalid(f"unknown params for {self.id}: {sorted(unknown)}")
        self.seed = int(seed)
        self.h = {**self.horizon_defaults, **{k: v for k, v in (horizons or {}).items() if v is not None}}
        extra = set(tolerances or {}) - set(self.tolerance_defaults)
        if extra:
            raise ConfigInvalid(f"unknown tolerances for {self.id}: {sorted(extra)}")
        self.tol = {**self.tolerance_defaults, **(tolerances or {})}
        self.setup()

    def setup(self):
        pass

    @classmethod
    def diagnostic_names(cls) -> list:
        return [n[5:] for n in dir(cls) if n.startswith("diag_")]

    def run(self, diagnostics=None) -> ScenarioResult:
        names = self.diagnostic_names() if diagnostics is None else list(diagnostics)
        for n in names:
            if n not in self.diagnostic_names():
                raise ConfigInvalid(f"scenario {self.id} has no diagnostic {n!r}")
        res = ScenarioResult(self.id)
        for n in sorted(names):
            res.outputs[n] = getattr(self, "diag_" + n)()
        return res


def _slope(ys) -> float:
    ys = np.asarray(ys, float)
    if ys.size < 2:
        return 0.0
    return float(np.polyfit(np.arange(ys.size), ys, 1)[0])


def _coords(p) -> str:
    v = p.coords if hasattr(p, "coords") else np.ravel(p)
    return " ".join(f"{c:.17g}" for c in v)


def _tracking_table(seq, dom) -> list:
    rows = groups.tracking_rows(seq)
    sv = groups.sv_distance_gap(seq, dom)["values"]
    for r, v in zip(rows, sv):
        r["sv_distance_gap"] = float(v)
    return rows


def _straightness_growth(seq, horizons) -> list:
    out = []
    for N in horizons:
        sub = seq.elements[: N + 1]
        out.append({"N": N, "D_hat_1": groups.straightness_residual(sub, 1)["D_hat"],
                    "D_hat_dm1": groups.straightness_residual(sub, sub[0].gens.d - 1)["D_hat"]})
    return out


def contraction_radius_profile(dom, geo, centers_for_radius, radii, n_dirs=None, resolution=0.02):
    """Max projection diameter per radius, for balls produced by centers_for_radius(r)."""
    rows = []
    for r in radii:
        rep = hilbert.contraction_profile(dom, geo, [(c, r) for c in centers_for_radius(r)],
                                          n_dirs=n_dirs, resolution=resolution)
        rows.append({"radius": float(r), "max_projection_diameter": rep.max_projection_diameter})
    return rows


# ---------------------------------------------------------------------------
# klein
# ---------------------------------------------------------------------------


class KleinScenario(Scenario):
    id = "klein"
    description = "Klein disk with a boost along a diameter (light-cone coordinates)"
    defaults = {"boost": 1.0, "pairs": 1000}
    horizon_defaults = {"N": 25, "L_max": 3, "T_max": 6.0}
    tolerance_defaults = {"oracle": 1e-9, "straightness": 1e-8, "boundary": 0.05, "contraction_ratio": 1.5}

    def setup(self):
        t = float(self.params["boost"])
        self.t = t
        self.dom = domains.build_klein_null_disk()
        self.gens = groups.GeneratorSet([np.diag([math.exp(t), 1.0, math.exp(-t)])], names=["b"])
        self.x0 = np.array([1.0, 0.0, 1.0])
        self.ray = hilbert.Geodesic(self.dom, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]),
                                    origin=self.x0)
        N = int(self.h["N"])
        cands = [groups.GroupElement.letter(self.gens, 0, j) for j in range(N + 2)]
        self.seq = groups.tracking_sequence(self.dom, self.gens, self.ray, self.x0, N,
                                            candidates=cands, step=t)
        self.chart = regularity.adapted_chart(self.dom, self.ray)

    def diag_distance_oracle(self):
        rng = np.random.default_rng(self.seed)
        K = domains.build_klein_ball(3)
        n = int(self.params["pairs"])
        r = rng.uniform(0, 0.999, n)
        th = rng.uniform(0, 2 * np.pi, n)
        Y = np.column_stack([r * np.cos(th), r * np.sin(th), np.ones(n)])
        X = np.tile([0.0, 0.0, 1.0], (n, 1))
        got = hilbert.hilbert_distances(K, X, Y)
        want = 0.5 * np.log((1 + r) / (1 - r))
        err = float(np.max(np.abs(got - want)))
        rows = [{"i": i, "r": float(r[i]), "hil": float(got[i]), "closed_form": float(want[i])}
                for i in range(n)]
        return DiagnosticOutput({"distance_oracle": rows}, {"distance_oracle": {"max_abs_error": err}},
                                [Check("klein_distance_closed_form", err <= self.tol["oracle"], err)])

    def diag_tracking(self):
        rows = _tracking_table(self.seq, self.dom)
        sv = groups.sv_distance_gap(self.seq, self.dom)
        return DiagnosticOutput({"tracking": rows}, {"sv_distance_gap": {"max_abs": sv["max_abs"]}},
                                [Check("sv_distance_zero", sv["max_abs"] <= self.tol["oracle"], sv["max_abs"])])

    def diag_straightness(self):
        st = groups.straightness_residual(self.seq, 1)
        return DiagnosticOutput({}, {"straightness": {"D_hat": st["D_hat"]}},
                                [Check("straightness_zero", st["D_hat"] <= self.tol["straightness"], st["D_hat"])])

    def diag_regularity(self):
        sp = regularity.spectral_alpha_beta(self.seq)
        fit = regularity.boundary_graph_fit(self.chart)
        uni = regularity.uniform_regularity_stats(self.seq, 1)
        su = regularity.strong_uniform_stats(self.seq, 1, 5, min_ratio_only=True)
        rep = regularity.RegularityReport(sp["alpha0"], sp["beta0"], fit.alpha_hat, fit.beta_hat,
                                          {"1": uni["ratio_min_tail"]}, {"1": su["min_ratio"]},
                                          sp["window"], 5, {"boundary": self.tol["boundary"]})
        checks = [
            Check("alpha0_equals_2", abs(sp["alpha0"] - 2) <= self.tol["oracle"], sp["alpha0"]),
            Check("beta0_equals_2", abs(sp["beta0"] - 2) <= self.tol["oracle"], sp["beta0"]),
            Check("alpha_boundary_near_2", abs(fit.alpha_hat - 2) <= self.tol["boundary"], fit.alpha_hat),
            Check("beta_boundary_near_2", abs(fit.beta_hat - 2) <= self.tol["boundary"], fit.beta_hat),
        ]
        return DiagnosticOutput({}, {"regularity": _report_dict(rep)}, checks)

    def diag_envelope(self):
        rep = regularity.envelope_check(self.chart, self.seq, window=(5, int(self.h["N"])))
        rows = [{"n": 5 + i, "B": b} for i, b in enumerate(rep["B_per_n"])]
        return DiagnosticOutput({"envelope": rows}, {"envelope": {k: rep[k] for k in ("B", "B_slope", "stable")}},
                                [Check("envelope_B_stable", rep["stable"], rep["B_slope"])])

    def diag_contraction(self):
        K = domains.build_klein_ball(3)
        geo = hilbert.Geodesic(K, np.array([-1.0, 0.0, 1.0]), np.array([1.0, 0.0, 1.0]),
                               origin=np.array([0.0, 0.0, 1.0]), truncation=float(self.h["T_max"]) + 8)

        def centers(r):
            y = math.tanh(r + 1.0)
            return [np.array([0.0, y, 1.0]), np.array([0.0, -y, 1.0])]

        rows = contraction_radius_profile(K, geo, centers, [1.0, 2.0, 4.0])
        ratio = max(rows[i + 1]["max_projection_diameter"] / rows[i]["max_projection_diameter"]
                    for i in range(len(rows) - 1))
        return DiagnosticOutput({"contraction": rows}, {"contraction": {"max_doubling_ratio": ratio}},
                                [Check("klein_contraction_bounded", ratio < self.tol["contraction_ratio"], ratio)])


def _report_dict(rep) -> dict:
    import json

    return json.loads(rep.to_json())


# ---------------------------------------------------------------------------
# simplex
# ---------------------------------------------------------------------------


class SimplexScenario(Scenario):
    id = "simplex"
    description = "Projective 2-simplex: diagonal sequences, face detection, flat contraction"
    defaults = {"pairs": 1000}
    horizon_defaults = {"N": 20}
    tolerance_defaults = {"oracle": 1e-9}

    def setup(self):
        self.dom = domains.build_simplex(2, 3)

    def diag_distance_oracle(self):
        rng = np.random.default_rng(self.seed)
        n = int(self.params["pairs"])
        X = np.exp(rng.uniform(-3, 3, (n, 3)))
        Y = np.exp(rng.uniform(-3, 3, (n, 3)))
        got = hilbert.hilbert_distances(self.dom, X, Y)
        L = np.log(X) - np.log(Y)
        want = 0.5 * (L.max(axis=1) - L.min(axis=1))
        err = float(np.max(np.abs(got - want)))
        return DiagnosticOutput({}, {"distance_oracle": {"max_abs_error": err}},
                                [Check("simplex_distance_closed_form", err <= self.tol["oracle"], err)])

    def _seq(self, diag):
        gens = groups.GeneratorSet([np.diag(diag)])
        return [groups.GroupElement.letter(gens, 0, n) for n in range(int(self.h["N"]) + 1)]

    def diag_face_detection(self):
        rows, checks = [], []
        for diag, limit in (([2.0, 1.0, 0.5], [1.0, 0.0, 0.0]), ([2.0, 2.0, 1.0], [1.0, 1.0, 0.0])):
            k = regularity.face_dimension_from_gaps(self._seq(diag))
            face = self.dom.face_of(ProjectivePoint(limit)).dimension
            rows.append({"sequence": "diag(" + ",".join(f"{v:g}" for v in diag) + ")^n",
                         "k_from_gaps": k, "face_dimension": face})
            checks.append(Check(f"face_detection_{k}", k == face, k))
        return DiagnosticOutput({"face_detection": rows}, {}, checks)

    def diag_sv_gap(self):
        gens = groups.GeneratorSet([np.diag([2.0, 1.0, 0.5])])
        x0 = np.ones(3)
        N = int(self.h["N"])
        vals = []
        for n in range(N + 1):
            g = groups.GroupElement.letter(gens, 0, n)
            mu = groups.element_cartan(g)
            h = hilbert.hilbert_distance(self.dom, x0, g.apply(x0)) if n else 0.0
            vals.append(mu.gap(1, 3) - 2 * h)
        m = float(np.max(np.abs(vals)))
        return DiagnosticOutput({"sv_gap": [{"n": n, "deviation": v} for n, v in enumerate(vals)]},
                                {"sv_gap": {"max_abs": m}}, [Check("sv_distance_zero", m <= self.tol["oracle"], m)])

    def diag_contraction(self):
        # geodesic from the edge point [1:0:1] to the vertex [0:1:0]; balls centered
        # on the parallel line [1 : 1 : e^{2h}] at distance h = r + 1
        dom = self.dom
        geo = hilbert.Geodesic(dom, np.array([1.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]),
                               origin=np.ones(3), truncation=30.0)

        def centers(r):
            return [np.array([1.0, 1.0, math.exp(2 * (r + 1.0))])]

        rows = contraction_radius_profile(dom, geo, centers, [1.0, 2.0, 4.0, 8.0])
        d = [r["max_projection_diameter"] for r in rows]
        growing = all(b > a for a, b in zip(d, d[1:]))
        return DiagnosticOutput({"contraction": rows}, {"contraction": {"diameters": d}},
                                [Check("simplex_contraction_grows", growing, d[-1])])


# ---------------------------------------------------------------------------
# disk hull with a dual point
# ---------------------------------------------------------------------------


class DualPointScenario(Scenario):
    id = "example51"
    description = "Hull of the Klein disk and the dual point of a diameter"
    defaults = {"n_circle": 720}

    def setup(self):
        self.dom = domains.build_disk_dual_point(int(self.params["n_circle"]))

    def diag_classification(self):
        pts = {"l_star": [0.0, 1.0, 0.0], "tangency_right": [1.0, 0.0, 1.0],
               "tangency_left": [-1.0, 0.0, 1.0], "arc_bottom": [0.0, -1.0, 1.0]}
        expected = {"l_star": "non_C1", "tangency_right": "in_segment_closure",
                    "tangency_left": "in_segment_closure", "arc_bottom": "C1_extreme"}
        rows, checks = [], []
        for name, v in pts.items():
            bp = domains.classify_boundary_point(self.dom, ProjectivePoint(v))
            rows.append({"point": name, "coords": _coords(bp.point), "classification": bp.classification.value,
                         "supports": len(bp.supports), "confidence": bp.confidence})
            checks.append(Check(f"classify_{name}", bp.classification.value == expected[name],
                                len(bp.supports)))
        segs = self.dom.boundary_segments()
        checks.append(Check("two_maximal_segments", len(segs) == 2, len(segs)))
        return DiagnosticOutput({"classification": rows}, {"segments": {"count": len(segs)}}, checks)


# ---------------------------------------------------------------------------
# coxeter (3,3,4)
# ---------------------------------------------------------------------------


class Coxeter334Scenario(Scenario):
    id = "coxeter334"
    description = "Asymmetric (3,3,4) reflection group: hull domain, tracking and boundary exponents"
    defaults = {"cartan": list(ASYMMETRIC_334), "depth": 12, "axis_word": [0, 1, 2], "ball_length": 3}
    horizon_defaults = {"N": 30}
    tolerance_defaults = {"trend": 1e-3, "spectral": 1e-3, "boundary": 0.1}

    def setup(self):
        data = domains.coxeter_hull_data((3, 3, 4), self.params["cartan"], int(self.params["depth"]),
                                         axis_word=tuple(self.params["axis_word"]))
        self.data = data
        self.dom = data.domain
        self.gens = groups.GeneratorSet(data.generators, orders=[None, 2, 2, 2],
                                        names=["g", "s1", "s2", "s3"])
        phi = self.dom.phi
        self.ell = np.log(np.diag(data.axis))
        self.x_plus = np.array([1.0, 0.0, 0.0]) * np.sign(phi[0])
        self.x_minus = np.array([0.0, 0.0, 1.0]) * np.sign(phi[2])
        self.x0 = self.x_plus + self.x_minus
        self.ray = hilbert.Geodesic(self.dom, self.x_minus, self.x_plus, origin=self.x0)
        N = int(self.h["N"])
        self.ball = groups.orbit_ball(self.gens, int(self.params["ball_length"]))
        jmax = int(math.ceil(2 * N / (self.ell[0] - self.ell[2]))) + 2
        cands = groups.axis_candidates(self.gens, 0, jmax, self.ball)
        self.seq = groups.tracking_sequence(self.dom, self.gens, self.ray, self.x0, N, candidates=cands)
        self.axis_seq = [groups.GroupElement.letter(self.gens, 0, j) for j in range(N + 1)]
        self.chart = regularity.AdaptedChart(self.dom, self.ray, support_plus=np.array([0.0, 0.0, 1.0]),
                                             support_minus=np.array([1.0, 0.0, 0.0]))

    def diag_tracking(self):
        rows = _tracking_table(self.seq, self.dom)
        vals = [r["sv_distance_gap"] for r in rows]
        slope = _slope(vals)
        m = float(np.max(np.abs(vals)))
        return DiagnosticOutput({"tracking": rows},
                                {"sv_distance_gap": {"max_abs": m, "trend_slope": slope,
                                                     "achieved_R": self.seq.achieved_R}},
                                [Check("sv_distance_flat", slope <= self.tol["trend"], slope)])

    def diag_straightness(self):
        N = int(self.h["N"])
        rows = _straightness_growth(self.seq, [10, 15, 20, 25, N])
        d1 = [r["D_hat_1"] for r in rows]
        finite = all(math.isfinite(v) for v in d1)
        # the sup over a growing window can only rise; a trend means it keeps
        # rising over the tail horizons
        tail = [r for r in rows if r["N"] >= N - 10]
        rise = (tail[-1]["D_hat_1"] - tail[0]["D_hat_1"]) / max(1, tail[-1]["N"] - tail[0]["N"])
        no_growth = rise <= self.tol["trend"]
        return DiagnosticOutput({"straightness": rows}, {"straightness": {"D_hat": d1[-1], "tail_rise_per_step": rise}},
                                [Check("straightness_bounded", finite and no_growth, d1[-1])])

    def diag_regularity(self):
        sp = regularity.spectral_alpha_beta(self.axis_seq)
        target = float((self.ell[0] - self.ell[2]) / (self.ell[0] - self.ell[1]))
        fit = regularity.boundary_graph_fit(self.chart)
        track = regularity.spectral_alpha_beta(self.seq)
        uni = regularity.uniform_regularity_stats(self.seq, 1)
        rep = regularity.RegularityReport(sp["alpha0"], sp["beta0"], fit.alpha_hat, fit.beta_hat,
                                          {"1": uni["ratio_min_tail"]}, {}, sp["window"], 5,
                                          {"spectral": self.tol["spectral"], "boundary": self.tol["boundary"]})
        out = _report_dict(rep)
        out["eigen_ratio"] = target
        out["tracking_alpha0"] = track["alpha0"]
        out["tracking_beta0"] = track["beta0"]
        checks = [
            Check("alpha0_matches_eigen_ratio", abs(sp["alpha0"] - target) <= self.tol["spectral"], sp["alpha0"]),
            Check("alpha_boundary_matches", abs(fit.alpha_hat - sp["alpha0"]) <= self.tol["boundary"], fit.alpha_hat),
            Check("beta_boundary_matches", abs(fit.beta_hat - sp["beta0"]) <= self.tol["boundary"], fit.beta_hat),
            Check("alpha0_exceeds_1", sp["alpha0"] > 1.05, sp["alpha0"]),
        ]
        return DiagnosticOutput({"boundary_fit": [{"log2_r": a, "log2_f_max": b, "log2_f_min": c}
                                                  for a, b, c in zip(fit.log_r, fit.log_max, fit.log_min)]},
                                {"regularity": out}, checks)

    def diag_envelope(self):
        N = int(self.h["N"])
        rep = regularity.envelope_check(self.chart, self.seq, window=(5, N))
        rows = [{"n": 5 + i, "B": b} for i, b in enumerate(rep["B_per_n"])]
        return DiagnosticOutput({"envelope": rows}, {"envelope": {k: rep[k] for k in ("B", "B_slope", "stable")}},
                                [Check("envelope_B_stable", rep["stable"], rep["B_slope"])])

    def diag_probes(self):
        l71 = groups.axis_growth_check(self.gens, 0, 20)
        ball4 = groups.orbit_ball(self.gens, 6)
        l54 = groups.distance_gap_probe(self.dom, ball4, self.x0, [1.0, 2.0, 3.0, 4.0])
        mins = [v for v in l54["min_mu12"] if math.isfinite(v)]
        nondecreasing = all(b >= a - 1e-9 for a, b in zip(mins, mins[1:]))
        floor = groups.gap_ratio_floor(ball4, 5)
        return DiagnosticOutput({"gap_growth": [{"k": k, "min_mu12": v} for k, v in zip(l54["k"], l54["min_mu12"])]},
                                {"probes": {"axis_growth_slope": l71["slope"], "axis_growth_const": l71["const"],
                                            "gap_ratio_floor": floor}},
                                [Check("axis_growth_positive", l71["ok"], l71["slope"]),
                                 Check("gap_growth_nondecreasing", nondecreasing, mins[-1] if mins else math.nan),
                                 Check("gap_ratio_floor_positive", floor > 0, floor)])


# ---------------------------------------------------------------------------
# graph domain
# ---------------------------------------------------------------------------


class GraphScenario(Scenario):
    id = "graphp"
    description = "Chart domain |x|^p < y < 2 - |x|: boundary exponent p at the origin"
    defaults = {"p": 3.0}
    tolerance_defaults = {"boundary": 0.1}

    def setup(self):
        self.dom = domains.build_graph_domain(float(self.params["p"]))

    def diag_boundary_fit(self):
        p = float(self.params["p"])
        z = ProjectivePoint([0.0, 0.0, 1.0])
        fit = regularity.boundary_graph_fit(self.dom, z)
        bp = domains.classify_boundary_point(self.dom, z)
        tol = self.tol["boundary"]
        return DiagnosticOutput({"boundary_fit": [{"log2_r": a, "log2_f_max": b, "log2_f_min": c}
                                                  for a, b, c in zip(fit.log_r, fit.log_max, fit.log_min)]},
                                {"boundary_fit": {"alpha_hat": fit.alpha_hat, "beta_hat": fit.beta_hat,
                                                  "classification": bp.classification.value}},
                                [Check("graph_alpha_is_p", abs(fit.alpha_hat - p) <= tol, fit.alpha_hat),
                                 Check("graph_beta_is_p", abs(fit.beta_hat - p) <= tol, fit.beta_hat)])


# ---------------------------------------------------------------------------
# counterexample
# ---------------------------------------------------------------------------


class CounterexampleScenario(Scenario):
    id = "counterexample"
    description = "Words w_k: uniformly but not strongly uniformly 1-regular"
    defaults = {"rotation_seed": 7, "k_max": 41, "window": [20, 40], "strong_N": 5,
                "uniform_threshold": 0.02}

    def setup(self):
        self.gens = groups.counterexample_generators(int(self.params["rotation_seed"]))
        self.flat = groups.flat_direction(self.gens, [1, 2])
        self.k_max = int(self.params["k_max"])
        self.ws = [groups.wk_builder(0, self.flat, k) for k in range(self.k_max + 1)]

    def diag_strong_uniform(self):
        N = int(self.params["strong_N"])
        prefixes = groups.letter_prefixes(self.ws[-1])
        su = regularity.strong_uniform_stats(prefixes, 1, N, min_ratio_only=True)
        rows, all_zero = [], True
        for k in range(1, self.k_max + 1, 2):
            m = (k - 1) // 2
            r, q = regularity.quotient_ratio(self.ws[k - 1], self.ws[k], 1)
            expect = self.flat.a(m + 1)
            ok = r == 0.0 and q.word == expect.word
            all_zero &= ok
            rows.append({"k": k, "quotient": q.word_string(), "ratio": r, "is_a_m_plus_1": int(ok)})
        rep = {"min_ratio": su["min_ratio"], "argmin": list(su["argmin"]), "witness_word": su["witness_word"],
               "N": N, "sequence": "letter prefixes of w_kmax"}
        return DiagnosticOutput({"odd_step_witnesses": rows}, {"strong_uniform": rep},
                                [Check("strong_uniform_min_zero", su["min_ratio"] == 0.0, su["min_ratio"]),
                                 Check("odd_step_quotients_exact", all_zero, len(rows))])

    def diag_uniform(self):
        lo, hi = self.params["window"]
        thr = float(self.params["uniform_threshold"])
        u1 = regularity.uniform_regularity_stats(self.ws, 1, window=(lo, hi))
        u3 = regularity.uniform_regularity_stats(self.ws, 3, window=(lo, hi))
        rows = []
        for k in range(self.k_max + 1):
            mu = groups.element_cartan(self.ws[k])
            rows.append({"k": k, "mu_1_2": mu.gap(1, 2), "mu_3_4": mu.gap(3, 4), "mu_1_4": mu.gap(1, 4),
                         "mu_1_4_over_k2": mu.gap(1, 4) / k ** 2 if k else 0.0,
                         "mu_1_2_over_k2": mu.gap(1, 2) / k ** 2 if k else 0.0})
        upper = max(r["mu_1_4_over_k2"] for r in rows[1:])
        rep = {"ratio_min_tail_k1": u1["ratio_min_tail"], "ratio_min_tail_k3": u3["ratio_min_tail"],
               "window": [lo, hi], "threshold": thr, "mu_1_4_over_k2_max": upper}
        return DiagnosticOutput({"wk_gaps": rows}, {"uniform": rep},
                                [Check("uniform_k1_positive", u1["ratio_min_tail"] > thr, u1["ratio_min_tail"]),
                                 Check("uniform_k3_positive", u3["ratio_min_tail"] > thr, u3["ratio_min_tail"]),
                                 Check("mu14_over_k2_bounded", math.isfinite(upper), upper)])


# ---------------------------------------------------------------------------
# rescaling toward a boundary segment
# ---------------------------------------------------------------------------


class SegmentRescaleScenario(Scenario):
    id = "rescale36"
    description = "Rescalings diag(n^2, 1/n, 1/n) of a domain with a boundary segment"
    defaults = {"ns": [1, 10, 100, 1000, 10000], "samples": 1000, "bulge": 0.3}
    tolerance_defaults = {"rescale": 0.01, "doubling": 0.1}

    def setup(self):
        self.dom = benzecri.build_segment_bulge(float(self.params["bulge"]))
        self.simplex = domains.build_simplex(2, 3)

    def diag_rescale(self):
        ns = [int(n) for n in self.params["ns"]]
        s = int(self.params["samples"])
        maps = benzecri.segment_rescale_maps(ns)
        m = np.array([0.0, 1.0, 1.0])
        base = np.array([1.0, 1.0, 1.0])
        rep = benzecri.conical_rescale(self.dom, maps, self.simplex, probes=[m, base], ns=ns, samples=s,
                                       threshold=self.tol["rescale"])
        rep2 = benzecri.conical_rescale(self.dom, maps, self.simplex, ns=ns, samples=2 * s)
        rows = []
        for n, d1, d2, imgs in zip(ns, rep.distances, rep2.distances, rep.probe_images):
            rows.append({"n": n, "hausdorff_to_simplex": d1, "hausdorff_doubled": d2,
                         "image_m": _coords(imgs[0]), "image_base": _coords(imgs[1])})
        last, last2 = rep.distances[-1], rep2.distances[-1]
        stable = abs(last - last2) <= self.tol["doubling"] * max(last, last2) or max(last, last2) <= 1e-12
        e1 = ProjectivePoint([1.0, 0.0, 0.0])
        backward = rep.probe_images[-1][1].angle(e1)
        forward = rep.probe_images[-1][0].angle(ProjectivePoint(m))
        return DiagnosticOutput({"rescale": rows},
                                {"rescale": {"final": last, "final_doubled": last2, "converged": rep.converged,
                                             "decay_factor": rep.decay_factor, "threshold": rep.threshold,
                                             "base_to_e1_angle": backward, "m_fixed_angle": forward}},
                                [Check("rescale_below_threshold", last < self.tol["rescale"], last),
                                 Check("rescale_doubling_stable", stable, last2),
                                 Check("backward_probe_to_e1", backward < 1e-6, backward),
                                 Check("forward_probe_fixed", forward < 1e-12, forward)])


SCENARIOS = {cls.id: cls for cls in (KleinScenario, SimplexScenario, DualPointScenario, Coxeter334Scenario,
                                     GraphScenario, CounterexampleScenario, SegmentRescaleScenario)}


def get_scenario(name: str):
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigInvalid(f"unknown scenario {name!r}") from None
