"""Boundary regularity exponents by two routes: log-log fits of the boundary
graph in an adapted chart, and singular-value ratios along tracking
sequences; plus the uniform / strong-uniform regularity statistics."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from hglab.domains import ConvexDomain, Ellipsoid, GraphDomain, Polytope, _rows
from hglab.errors import (
    EmptyAnnulus,
    EndpointNotBoundary,
    InsufficientScales,
    NoStableGap,
    NonUniqueSupportRequired,
    NotC1Point,
    NotDivergent,
    TooShort,
)
from hglab.groups import GroupElement, TrackingSequence, element_cartan
from hglab.projlin import CartanVector, _mu_from_partial_sums, exterior_power, unit


def _elements(seq) -> list:
    return seq.elements if isinstance(seq, TrackingSequence) else list(seq)


# ---------------------------------------------------------------------------
# adapted chart
# ---------------------------------------------------------------------------


class AdaptedChart:
    """Chart Psi(x, s) = [x + s v_minus + v_plus] with x in W_0 = H_+ cap H_-.

    Vertical lines {x fixed} pass through c(-inf) = [v_minus]; the boundary
    near c(+inf) is the graph s = f(x) of a convex function with f(0) = 0.
    The height of x is h(x) = (1/2) log(s0 / f(x)), where s0 is the s-value
    of c(0), so that h agrees with the geodesic parameter on the axis.
    """

    def __init__(self, dom: ConvexDomain, geo, support_plus=None, support_minus=None):
        self.domain = dom
        self.geodesic = geo
        a, b = np.asarray(geo.a, float), np.asarray(geo.b, float)
        for p in (a, b):
            m = dom.margins(p)[0]
            if dom.is_interior(p)[0] or abs(m) > 1e-6:
                raise EndpointNotBoundary("adapted charts need boundary endpoints")
        self.alpha_plus = self._support(b, support_plus, strict=True)
        self.alpha_minus = self._support(a, support_minus, strict=False)
        vp = b / (self.alpha_minus @ b)
        vm = a / (self.alpha_plus @ a)
        self.v_plus, self.v_minus = vp, vm
        _, _, vt = np.linalg.svd(np.vstack([self.alpha_plus, self.alpha_minus]))
        self.W0 = vt[2:].T  # orthonormal basis of W_0, shape (d, d-2)
        # c(0) = e^0 a + kappa b  ->  v_plus + s0 v_minus
        self.s0 = float((self.alpha_plus @ a) / (geo.kappa * (self.alpha_minus @ b)))

    def _support(self, z, choice, strict: bool) -> np.ndarray:
        hs = self.domain.supporting_hyperplanes(z)
        if choice is not None:
            cov = np.asarray(choice.covector if hasattr(choice, "covector") else choice, float)
        elif len(hs) == 1:
            cov = hs[0].covector
        elif strict:
            raise NonUniqueSupportRequired("c(+inf) has several supports; pass support_plus")
        else:
            cov = unit(sum(self.domain._orient(h.covector)[0] for h in hs))
        return self.domain._orient(cov)[0]

    def psi(self, x, s) -> np.ndarray:
        """Homogeneous rows for chart points (x rows in W_0 coordinates, s)."""
        x = np.atleast_2d(np.asarray(x, float))
        s = np.atleast_1d(np.asarray(s, float))
        return x @ self.W0.T + s[:, None] * self.v_minus + self.v_plus

    def f(self, x) -> np.ndarray:
        """Boundary graph over W_0 coordinates (rows)."""
        x = np.atleast_2d(np.asarray(x, float))
        X = x @ self.W0.T
        dom = self.domain
        if isinstance(dom, Ellipsoid):
            Q = dom.form
            qx = np.einsum("ij,jk,ik->i", X, Q, X)
            return np.maximum(-qx / (2.0 * (self.v_minus @ Q @ self.v_plus)), 0.0)
        if isinstance(dom, Polytope):
            F = dom.facets
            am = F @ self.v_minus
            num = X @ F.T + F @ self.v_plus
            sel = am > 0
            lower = -num[:, sel] / am[sel]
            return np.maximum(np.max(lower, axis=1), 0.0)
        return self._f_bisect(X)

    def _f_bisect(self, X: np.ndarray) -> np.ndarray:
        dom = self.domain
        n = X.shape[0]
        hi = np.ones(n)
        for _ in range(200):
            inside = dom.margins(X + hi[:, None] * self.v_minus + self.v_plus) > 0
            if np.all(inside):
                break
            hi = np.where(inside, hi, 2 * hi)
        lo = np.zeros(n)
        for _ in range(2000):
            mid = 0.5 * (lo + hi)
            inside = dom.margins(X + mid[:, None] * self.v_minus + self.v_plus) > 0
            hi = np.where(inside, mid, hi)
            lo = np.where(inside, lo, mid)
            if np.all(hi - lo <= 1e-14 * hi):
                break
        return hi

    def height(self, x) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 0.5 * np.log(self.s0 / self.f(x))

    def directions(self, n: int = 2) -> np.ndarray:
        k = self.W0.shape[1]
        if k == 1:
            return np.array([[1.0], [-1.0]])
        rng = np.random.default_rng(0)
        U = rng.standard_normal((n, k))
        return U / np.linalg.norm(U, axis=1, keepdims=True)

    def radial_grid(self, log10_min: float, log10_max: float = 0.0, per_decade: int = 40,
                    n_dirs: int = 16):
        """Sample points r u on a log-spaced radial grid; returns (x rows, r)."""
        r = np.logspace(log10_min, log10_max, int((log10_max - log10_min) * per_decade) + 1)
        U = self.directions(n_dirs)
        x = (r[:, None, None] * U[None, :, :]).reshape(-1, U.shape[1])
        rr = np.repeat(r, U.shape[0])
        return x, rr


def adapted_chart(dom: ConvexDomain, geo, support_plus=None, support_minus=None) -> AdaptedChart:
    return AdaptedChart(dom, geo, support_plus, support_minus)


def chart_at_point(dom: ConvexDomain, z, support=None) -> AdaptedChart:
    """Adapted chart for the line from the far side of the witness to z."""
    from hglab.hilbert import Geodesic

    zc = _rows(z)[0]
    far = dom.ray_exit(dom.witness, 2 * dom.lift(dom.witness)[0] - dom.lift(zc)[0])
    geo = Geodesic(dom, far.coords, zc, origin=dom.witness, interior_ends=(False, False))
    return AdaptedChart(dom, geo, support_plus=support)


# ---------------------------------------------------------------------------
# boundary route
# ---------------------------------------------------------------------------


@dataclass
class BoundaryFit:
    alpha_hat: float
    beta_hat: float
    scales: list
    log_r: list
    log_max: list
    log_min: list


def boundary_graph_fit(chart_or_dom, point=None, j_min: int = 3, j_max: int | None = None,
                       samples_per_annulus: int = 24, support=None) -> BoundaryFit:
    """Log-log slopes of the boundary graph over dyadic annuli 2^-j-1 <= r <= 2^-j.

    alpha_hat fits the per-annulus maximum of log f (upper envelope), beta_hat
    the per-annulus minimum (lower envelope).  A vanishing envelope gives an
    infinite exponent.
    """
    if isinstance(chart_or_dom, AdaptedChart):
        chart = chart_or_dom
    else:
        dom = chart_or_dom
        hs = dom.supporting_hyperplanes(point)
        if len(hs) > 1 and support is None:
            raise NotC1Point("boundary point has several supporting hyperplanes")
        chart = chart_at_point(dom, point, support)
    if j_max is None:
        j_max = _default_j_max(chart)
    js = list(range(j_min, j_max + 1))
    if len(js) < 4:
        raise InsufficientScales(f"need >= 4 dyadic scales, got {len(js)}")
    U = chart.directions()
    log_r, log_max, log_min = [], [], []
    for j in js:
        r = 2.0 ** (-j - np.linspace(0.0, 1.0, samples_per_annulus))
        x = (r[:, None, None] * U[None, :, :]).reshape(-1, U.shape[1])
        fv = chart.f(x)
        log_r.append(-j - 0.5)
        with np.errstate(divide="ignore"):
            log_max.append(float(np.log2(np.max(fv))))
            log_min.append(float(np.log2(np.min(fv))))
    lr = np.array(log_r)
    lmax, lmin = np.array(log_max), np.array(log_min)
    alpha = math.inf if not np.all(np.isfinite(lmax)) else float(np.polyfit(lr, lmax, 1)[0])
    beta = math.inf if not np.all(np.isfinite(lmin)) else float(np.polyfit(lr, lmin, 1)[0])
    return BoundaryFit(alpha, beta, js, log_r, log_max, log_min)


def _default_j_max(chart: AdaptedChart) -> int:
    dom = chart.domain
    if isinstance(dom, Polytope) and dom.sampled:
        # stay well above the sampling scale of hull vertices near c(+inf)
        V = dom.vertices()
        coords = (V - np.outer(V @ chart.alpha_minus, chart.v_plus)) @ chart.W0
        with np.errstate(divide="ignore"):
            ratio = np.linalg.norm(coords, axis=1) / np.abs(V @ chart.alpha_minus)
        pos = ratio[ratio > 0]
        r_min = np.min(pos) if pos.size else 2.0 ** -20
        return max(int(math.floor(-math.log2(r_min))) - 4, 4)
    if isinstance(dom, GraphDomain):
        return 30
    return 40


# ---------------------------------------------------------------------------
# spectral route
# ---------------------------------------------------------------------------


def _window(n_total: int, window=None) -> tuple[int, int]:
    if window is not None:
        return int(window[0]), int(window[1])
    return n_total // 2, n_total - 1


def _slope(ns, vals) -> float:
    ns = np.asarray(ns, float)
    if ns.size < 2:
        return 0.0
    return float(np.polyfit(ns, np.asarray(vals, float), 1)[0])


def spectral_alpha_beta(seq, window=None, min_slope: float = 1e-3) -> dict:
    """alpha0 = min mu_{1,d}/mu_{1,d-1}, beta0 = max mu_{1,d}/mu_{1,2} over the tail window."""
    elems = _elements(seq)
    mus = [element_cartan(g) for g in elems]
    lo, hi = _window(len(mus), window)
    ns = np.arange(lo, hi + 1)
    d = mus[0].d
    m1d = np.array([mus[n].gap(1, d) for n in ns])
    slope = _slope(ns, m1d)
    if len(ns) < 2 or slope <= min_slope or np.any(m1d <= 0):
        raise NotDivergent("mu_{1,d} does not grow over the tail window")
    m1dm1 = np.array([mus[n].gap(1, d - 1) for n in ns])
    m12 = np.array([mus[n].gap(1, 2) for n in ns])
    with np.errstate(divide="ignore"):
        ra = np.where(m1dm1 > 0, m1d / m1dm1, np.inf)
        rb = np.where(m12 > 0, m1d / m12, np.inf)
    return {"alpha0": float(np.min(ra)), "beta0": float(np.max(rb)), "window": (lo, hi),
            "alpha_trend": _slope(ns, ra) if np.all(np.isfinite(ra)) else math.nan,
            "beta_trend": _slope(ns, rb) if np.all(np.isfinite(rb)) else math.nan,
            "mu_1d_slope": slope}


def uniform_regularity_stats(seq, k: int, window=None, min_slope: float = 1e-3) -> dict:
    """Tail-window minimum of mu_{k,k+1}/mu_{1,d} and a divergence flag."""
    elems = _elements(seq)
    mus = [element_cartan(g) for g in elems]
    lo, hi = _window(len(mus), window)
    ns = np.arange(lo, hi + 1)
    d = mus[0].d
    m1d = np.array([mus[n].gap(1, d) for n in ns])
    mk = np.array([mus[n].gap(k, k + 1) for n in ns])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(m1d > 0, mk / m1d, np.nan)
    return {"ratio_min_tail": float(np.nanmin(ratio)), "divergent": bool(_slope(ns, m1d) > min_slope),
            "window": (lo, hi), "ratios": ratio.tolist()}


class _StepProduct:
    """Exterior-power factors of one step g_n^-1 g_{n+1}, pre-multiplied."""

    def __init__(self, step: GroupElement, d: int):
        self.diag = step.is_diagonal_word()
        self.logdiag = np.zeros(d)
        if self.diag:
            for i, e in step.word:
                self.logdiag += e * np.log(np.abs(np.diag(step.gens.matrices[i])))
        self.mats, self.scales = [], []
        for k in range(1, d):
            acc, sc = np.eye(math.comb(d, k)), 0.0
            for f in step.factors():
                acc = acc @ exterior_power(f, k)
                s = np.linalg.norm(acc)
                acc /= s
                sc += math.log(s)
            self.mats.append(acc)
            self.scales.append(sc)


def strong_uniform_stats(seq, k: int, N: int, min_ratio_only: bool = False) -> dict:
    """min over n >= 1, m > N of mu_{k,k+1}/mu_{1,d} of g_n^-1 g_{n+m}.

    Products are accumulated step by step along the sequence (the quotient
    g_n^-1 g_{n+m} telescopes into consecutive steps); quotients that are
    words in diagonal generators are evaluated exactly.
    """
    elems = _elements(seq)
    L = len(elems)
    if N >= L - 1:
        raise TooShort(f"sequence of length {L} too short for N = {N}")
    d = elems[0].gens.d
    steps = [_StepProduct(elems[n].quotient(elems[n + 1]), d) for n in range(L - 1)]
    table = np.full((L, L), np.nan)
    best, arg = math.inf, None
    for n in range(1, L):
        accs = [np.eye(math.comb(d, j)) for j in range(1, d)]
        scales = np.zeros(d - 1)
        logdiag = np.zeros(d)
        diag = True
        for m in range(1, L - n):
            st = steps[n + m - 1]
            diag = diag and st.diag
            logdiag = logdiag + st.logdiag
            for j in range(d - 1):
                accs[j] = accs[j] @ st.mats[j]
                s = np.linalg.norm(accs[j])
                accs[j] /= s
                scales[j] += st.scales[j] + math.log(s)
            if m <= N:
                continue
            if diag:
                mu = np.sort(logdiag)[::-1]
            else:
                partial = [scales[j] + math.log(np.linalg.norm(accs[j], 2)) for j in range(d - 1)]
                mu = _mu_from_partial_sums(partial + [0.0])
            cv = CartanVector(mu)
            top = cv.gap(1, d)
            r = cv.gap(k, k + 1) / top if top > 0 else math.nan
            table[n, m] = r
            if r < best:
                best, arg = r, (n, m)
    out = {"min_ratio": float(best), "argmin": arg, "N": N, "k": k}
    if arg is not None:
        out["witness_word"] = elems[arg[0]].quotient(elems[arg[0] + arg[1]]).word_string()
    if not min_ratio_only:
        out["table"] = table
    return out


def quotient_ratio(g: GroupElement, h: GroupElement, k: int) -> tuple[float, GroupElement]:
    """mu_{k,k+1}/mu_{1,d} of the reduced quotient g^-1 h (exact for diagonal words)."""
    q = g.quotient(h)
    mu = element_cartan(q)
    top = mu.gap(1, mu.d)
    return (mu.gap(k, k + 1) / top if top > 0 else math.nan), q


# ---------------------------------------------------------------------------
# sandwich and face detection
# ---------------------------------------------------------------------------


def envelope_check(chart: AdaptedChart, seq, window=None, log10_min: float | None = None,
                  per_decade: int = 200, stable_slope: float = 0.05) -> dict:
    """Smallest B with the boundary-graph sandwich holding on each annulus S_n.

    For x in S_n (heights between p_n - 1 and p_n, p_n the ray parameter of
    g_n): -mu_{1,d} - B <= log f(x) <= -mu_{1,d} + B and
    -mu_{1,d-1} - B <= log|x| <= -mu_{1,2} + B.
    """
    if not isinstance(seq, TrackingSequence):
        raise TypeError("envelope_check needs a TrackingSequence")
    params = seq.params or list(range(len(seq.elements)))
    lo, hi = _window(len(seq.elements), window)
    lo = max(lo, 1)
    p_max = params[hi]
    if log10_min is None:
        log10_min = -(2.0 * p_max + 10.0) / math.log(10)
    x, r = chart.radial_grid(log10_min, 0.0, per_decade)
    fx = chart.f(x)
    ok = fx > 0
    x, r, fx = x[ok], r[ok], fx[ok]
    h = 0.5 * np.log(chart.s0 / fx)
    per_n = []
    for n in range(lo, hi + 1):
        sel = (h >= params[n] - 1) & (h <= params[n])
        if not np.any(sel):
            raise EmptyAnnulus(f"annulus S_{n} has no samples")
        mu = element_cartan(seq.elements[n])
        d = mu.d
        lf = np.log(fx[sel])
        lx = np.log(r[sel])
        b = max(np.max(np.abs(lf + mu.gap(1, d))),
                np.max(-(lx + mu.gap(1, d - 1))), np.max(lx + mu.gap(1, 2)))
        per_n.append(float(b))
    ns = np.arange(lo, hi + 1)
    slope = _slope(ns, per_n)
    return {"B": float(max(per_n)), "B_per_n": per_n, "window": (lo, hi), "B_slope": slope,
            "stable": bool(abs(slope) <= stable_slope)}


def face_dimension_from_gaps(seq, window=None, bounded_slope: float = 0.01,
                             growth_slope: float = 0.05) -> int:
    """k with mu_{j,j+1} bounded for j <= k and mu_{k+1,k+2} growing."""
    elems = _elements(seq)
    mus = [element_cartan(g) for g in elems]
    lo, hi = _window(len(mus), window)
    ns = np.arange(lo, hi + 1)
    d = mus[0].d
    slopes = [_slope(ns, [mus[n].gap(j, j + 1) for n in ns]) for j in range(1, d)]
    for j, s in enumerate(slopes):
        if s > growth_slope:
            return j
        if s > bounded_slope:
            break
    raise NoStableGap(f"gap slopes {slopes} give no clear split")


@dataclass
class RegularityReport:
    alpha_spectral: float = math.nan
    beta_spectral: float = math.nan
    alpha_boundary: float = math.nan
    beta_boundary: float = math.nan
    uniform_k_ratio: dict = field(default_factory=dict)
    strong_uniform_min: dict = field(default_factory=dict)
    tail_window: tuple = ()
    N: int = 5
    tolerances: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, dict):
                return {str(a): clean(b) for a, b in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(b) for b in v]
            if isinstance(v, np.generic):
                return clean(v.item())
            return v

        return json.dumps(clean(asdict(self)), indent=2, sort_keys=True)
