"""Hilbert metric, unit-speed geodesics, nearest-point projection and the
contraction / slimness diagnostics used to probe Morse behaviour."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hglab.domains import ConvexDomain, _rows
from hglab.errors import NotInterior, OutOfRange, SamplerProducedIntersectingBall
from hglab.projlin import ProjectivePoint

PLATEAU_TOL = 1e-9
DISJOINT_MARGIN = 1e-3


def _log1p_inv(t: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log1p(1.0 / t)


def hilbert_distances(dom: ConvexDomain, X, Y) -> np.ndarray:
    """Row-wise Hilbert distances; raises NotInterior if any point is not interior."""
    Xh = dom.lift(X)
    Yh = dom.lift(Y)
    Xh, Yh = np.broadcast_arrays(Xh, Yh)
    inside = (dom.margins(Xh) > 0) & (dom.margins(Yh) > 0)
    if not np.all(inside):
        raise NotInterior(f"{int(np.sum(~inside))} point(s) not interior")
    diff = np.any(Xh != Yh, axis=1)
    out = np.zeros(Xh.shape[0])
    if np.any(diff):
        ta, tb = dom._chord_params_lifted(Xh, Yh, diff)
        out[diff] = 0.5 * (_log1p_inv(ta[diff]) + _log1p_inv(tb[diff]))
    return out


def hilbert_distance(dom: ConvexDomain, x, y) -> float:
    """Half the log cross-ratio of x, y against the endpoints of their chord."""
    return float(hilbert_distances(dom, x, y)[0])


class Geodesic:
    """Projective geodesic from x_minus to x_plus with unit-speed parameter.

    Endpoints may be interior (segment ends) or boundary points (rays and
    lines).  ``origin`` defaults to x_minus when it is interior, otherwise to
    x_plus when that is interior, otherwise to the point [a + b] of the lifted
    endpoints.  ``truncation`` bounds the parameter range used by the
    diagnostics on infinite sides.  ``interior_ends`` overrides the interior
    test for endpoints computed by exit searches, which may land a rounding
    error inside the domain.
    """

    def __init__(self, domain: ConvexDomain, x_minus, x_plus, origin=None,
                 truncation: float | None = None, interior_ends=None):
        self.domain = domain
        xm = _rows(x_minus)[0]
        xp = _rows(x_plus)[0]
        if interior_ends is None:
            im = bool(domain.is_interior(xm)[0])
            ip = bool(domain.is_interior(xp)[0])
        else:
            im, ip = map(bool, interior_ends)
        self.x_minus = ProjectivePoint(xm)
        self.x_plus = ProjectivePoint(xp)
        if self.x_minus == self.x_plus:
            from hglab.errors import CoincidentPoints

            raise CoincidentPoints("geodesic endpoints coincide")
        mh, ph = _lift_any(domain, xm), _lift_any(domain, xp)
        # chord endpoints a (beyond x_minus) and b (beyond x_plus)
        D = ph - mh
        a = mh - domain._exit(mh[None, :], -D[None, :])[0] * D if im else mh
        b = ph + domain._exit(ph[None, :], D[None, :])[0] * D if ip else ph
        self.a = a
        self.b = b
        if origin is None:
            origin = xm if im else (xp if ip else a + b)
        o = _lift_any(domain, _rows(origin)[0])
        coef, *_ = np.linalg.lstsq(np.column_stack([a, b]), o, rcond=None)
        if not (coef[0] > 0 and coef[1] > 0):
            raise OutOfRange("origin is not on the open segment")
        self.kappa = coef[1] / coef[0]
        self.origin = ProjectivePoint(o)
        self.t_lo = -self.param_of(xm, _abs=True) if im else -math.inf
        self.t_hi = self.param_of(xp, _abs=True) if ip else math.inf
        self.truncation = truncation

    @classmethod
    def through(cls, dom: ConvexDomain, x, y, truncation=None) -> Geodesic:
        """Full line through interior x, y with c(0) = x, oriented towards y."""
        xh, yh = dom.lift(x)[0], dom.lift(y)[0]
        D = yh - xh
        a = xh - dom._exit(xh[None, :], -D[None, :])[0] * D
        b = yh + dom._exit(yh[None, :], D[None, :])[0] * D
        return cls(dom, a, b, origin=xh, truncation=truncation, interior_ends=(False, False))

    @classmethod
    def ray(cls, dom: ConvexDomain, x, xi, truncation=None) -> Geodesic:
        """Ray from interior x to boundary point xi, parameterized from t = 0."""
        xh = dom.lift(x)[0]
        return cls(dom, xh, xi, origin=xh, truncation=truncation, interior_ends=(True, False))

    def param_range(self) -> tuple[float, float]:
        lo, hi = self.t_lo, self.t_hi
        if self.truncation is not None:
            lo = max(lo, -self.truncation)
            hi = min(hi, self.truncation)
        return lo, hi

    def param_of(self, p, _abs: bool = False) -> float:
        """Parameter t with c(t) = p (p on the geodesic's line)."""
        ph = _lift_any(self.domain, _rows(p)[0])
        coef, *_ = np.linalg.lstsq(np.column_stack([self.a, self.b]), ph, rcond=None)
        t = 0.5 * math.log(coef[1] / (coef[0] * self.kappa))
        return abs(t) if _abs else t

    def vectors(self, ts) -> np.ndarray:
        """Unnormalized rows e^{-t} a + e^{t} kappa b, scaled to avoid overflow."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.empty((ts.size, self.a.size))
        pos = ts >= 0
        e = np.exp(-2.0 * np.abs(ts))
        out[pos] = self.kappa * self.b + e[pos, None] * self.a
        out[~pos] = self.a + e[~pos, None] * (self.kappa * self.b)
        return out / np.linalg.norm(out, axis=1, keepdims=True)

    def __call__(self, t: float) -> ProjectivePoint:
        return unit_speed(self, t)


def _lift_any(dom: ConvexDomain, v: np.ndarray) -> np.ndarray:
    s = v @ dom.phi
    return v / s if abs(s) > 0 else v


def unit_speed(geo: Geodesic, t: float) -> ProjectivePoint:
    """Point c(t) with hil(c(0), c(t)) = |t|, on the x_plus side for t > 0."""
    tol = 1e-12 * max(1.0, abs(t))
    if t < geo.t_lo - tol or t > geo.t_hi + tol:
        raise OutOfRange(f"t = {t} outside [{geo.t_lo}, {geo.t_hi}]")
    return ProjectivePoint(geo.vectors([t])[0])


@dataclass(frozen=True)
class ProjectionResult:
    t_lo: float
    t_hi: float
    distance: float

    @property
    def diameter(self) -> float:
        return self.t_hi - self.t_lo


def _bounded_range(geo: Geodesic, t_range=None) -> tuple[float, float]:
    lo, hi = geo.param_range() if t_range is None else t_range
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise OutOfRange("geodesic range is unbounded; pass a truncation")
    return lo, hi


def nearest_point_projection(dom: ConvexDomain, geo: Geodesic, x, resolution: float = 0.01,
                             t_range=None) -> ProjectionResult:
    """Interval of minimizers of t -> hil(x, c(t)) over the (truncated) geodesic."""
    if not dom.is_interior(x)[0]:
        raise NotInterior(f"{x} is not interior")
    lo, hi = _bounded_range(geo, t_range)
    xr = _rows(x)
    n = max(int(math.ceil((hi - lo) / resolution)), 2) + 1
    ts = np.linspace(lo, hi, n)
    vals = hilbert_distances(dom, xr, _interior_rows(geo, ts))
    f = lambda t: float(hilbert_distances(dom, xr, _interior_rows(geo, [t]))[0])  # noqa: E731
    i = int(np.argmin(vals))
    # minimum refined by zooming into the bracketing cells
    tz, vz = _zoom_min(dom, geo, xr, [ts[max(i - 1, 0)]], [ts[min(i + 1, n - 1)]], rounds=12)
    t_star = float(tz[0]) if vz[0] <= vals[i] else float(ts[i])
    m = min(float(vz[0]), float(vals[i]))
    level = m + PLATEAU_TOL
    flat = np.flatnonzero(vals <= level)
    if flat.size == 0:
        return ProjectionResult(t_star, t_star, m)
    j_lo, j_hi = flat[0], flat[-1]
    t_lo = _edge(f, level, ts[j_lo - 1], ts[j_lo]) if j_lo > 0 else ts[0]
    t_hi = _edge(f, level, ts[j_hi + 1], ts[j_hi]) if j_hi < n - 1 else ts[-1]
    t_lo, t_hi = min(t_lo, t_star), max(t_hi, t_star)
    return ProjectionResult(float(t_lo), float(t_hi), m)


def _edge(f, level, out_t, in_t, iters: int = 50) -> float:
    for _ in range(iters):
        mid = 0.5 * (out_t + in_t)
        if f(mid) <= level:
            in_t = mid
        else:
            out_t = mid
    return in_t


def _interior_rows(geo: Geodesic, ts) -> np.ndarray:
    return geo.vectors(ts)


def distance_to_geodesic(dom: ConvexDomain, geo: Geodesic, X, resolution: float = 0.01,
                         t_range=None) -> np.ndarray:
    """Grid estimate (then trisection refined) of hil(x, geo) for each row of X."""
    X = _rows(X)
    lo, hi = _bounded_range(geo, t_range)
    n = max(int(math.ceil((hi - lo) / resolution)), 2) + 1
    ts = np.linspace(lo, hi, n)
    P = geo.vectors(ts)
    k = X.shape[0]
    D = hilbert_distances(dom, np.repeat(X, n, axis=0), np.tile(P, (k, 1))).reshape(k, n)
    idx = np.argmin(D, axis=1)
    a = ts[np.maximum(idx - 1, 0)]
    b = ts[np.minimum(idx + 1, n - 1)]
    _, best = _zoom_min(dom, geo, X, a, b)
    return np.minimum(best, D[np.arange(k), idx])


def _zoom_min(dom, geo, X, a, b, rounds: int = 8, m: int = 21):
    """Refine per-row minimizers of t -> hil(x, c(t)) inside brackets [a, b].

    Each round evaluates an m-point grid per row in one vectorized call and
    shrinks the bracket to the two cells around the best point.
    """
    k = X.shape[0]
    u = np.linspace(0.0, 1.0, m)
    a = np.asarray(a, float).copy()
    b = np.asarray(b, float).copy()
    rows = np.arange(k)
    for _ in range(rounds):
        T = a[:, None] + (b - a)[:, None] * u[None, :]
        V = hilbert_distances(dom, np.repeat(X, m, axis=0), geo.vectors(T.ravel())).reshape(k, m)
        j = np.argmin(V, axis=1)
        best_t = T[rows, j]
        best_v = V[rows, j]
        a = T[rows, np.maximum(j - 1, 0)]
        b = T[rows, np.minimum(j + 1, m - 1)]
    return best_t, best_v


def _projection_params(dom, geo, X, resolution, t_range) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection intervals (grid plateau, no refinement)."""
    X = _rows(X)
    lo, hi = _bounded_range(geo, t_range)
    n = max(int(math.ceil((hi - lo) / resolution)), 2) + 1
    ts = np.linspace(lo, hi, n)
    P = geo.vectors(ts)
    k = X.shape[0]
    D = hilbert_distances(dom, np.repeat(X, n, axis=0), np.tile(P, (k, 1))).reshape(k, n)
    m = D.min(axis=1, keepdims=True)
    mask = D <= m + PLATEAU_TOL
    first = np.argmax(mask, axis=1)
    last = n - 1 - np.argmax(mask[:, ::-1], axis=1)
    return ts[first], ts[last]


def hausdorff_distance_geodesics(dom: ConvexDomain, g1: Geodesic, g2: Geodesic, samples: int = 100,
                                 resolution: float = 0.01) -> float:
    """Sampled two-sided Hausdorff distance between (truncated) geodesics."""
    out = 0.0
    for ga, gb in ((g1, g2), (g2, g1)):
        lo, hi = _bounded_range(ga)
        pts = ga.vectors(np.linspace(lo, hi, samples))
        out = max(out, float(np.max(distance_to_geodesic(dom, gb, pts, resolution))))
    return out


def ball_boundary(dom: ConvexDomain, x, r: float, n_dirs: int | None = None,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Points at Hilbert distance exactly r from x in n_dirs chart directions."""
    d = dom.d
    if n_dirs is None:
        n_dirs = 64 if d == 3 else 256
    xh = dom.lift(x)[0]
    _, _, vt = np.linalg.svd(dom.phi[None, :])
    K = vt[1:]  # basis of ker(phi)
    if d == 3:
        th = 2 * np.pi * np.arange(n_dirs) / n_dirs
        S = np.column_stack([np.cos(th), np.sin(th)])
    else:
        rng = rng or np.random.default_rng(0)
        S = rng.standard_normal((n_dirs, d - 1))
        S /= np.linalg.norm(S, axis=1, keepdims=True)
    Dirs = S @ K
    Xr = np.repeat(xh[None, :], n_dirs, axis=0)
    sb = dom._exit(Xr, Dirs)
    sa = dom._exit(Xr, -Dirs)
    A = Xr - sa[:, None] * Dirs
    B = Xr + sb[:, None] * Dirs
    kappa = sa / sb
    P = math.exp(-r) * A + math.exp(r) * kappa[:, None] * B
    return P / np.linalg.norm(P, axis=1, keepdims=True)


@dataclass
class ContractionReport:
    max_projection_diameter: float
    witness: tuple
    diameters: list = field(default_factory=list)
    truncation: tuple = ()


def contraction_profile(dom: ConvexDomain, geo: Geodesic, balls, n_dirs: int | None = None,
                        resolution: float = 0.01, margin: float = DISJOINT_MARGIN,
                        t_range=None) -> ContractionReport:
    """Projection diameters of Hilbert balls disjoint from the geodesic.

    ``balls`` yields (center, radius) pairs.  Each ball must satisfy
    hil(center, geo) > radius + margin.
    """
    best, witness, diams = -1.0, None, []
    rng = _bounded_range(geo, t_range)
    for center, radius in balls:
        dist = float(distance_to_geodesic(dom, geo, center, resolution, rng)[0])
        if dist <= radius + margin:
            raise SamplerProducedIntersectingBall(
                f"ball of radius {radius} at distance {dist:.6g} meets the geodesic")
        if radius == 0:
            pts = _rows(center)
        else:
            pts = np.vstack([_rows(center), ball_boundary(dom, center, radius, n_dirs)])
        lo, hi = _projection_params(dom, geo, pts, resolution, rng)
        diam = float(np.max(hi) - np.min(lo))
        diams.append(diam)
        if diam > best:
            best, witness = diam, (ProjectivePoint(_rows(center)[0]), float(radius))
    return ContractionReport(best, witness, diams, rng)


def random_ball_sampler(dom: ConvexDomain, geo: Geodesic, n: int, rng: np.random.Generator,
                        max_radius: float = 3.0, resolution: float = 0.02,
                        margin: float = DISJOINT_MARGIN):
    """Random interior centers with radii strictly below their distance to geo."""
    centers = dom.interior_samples(4 * n, rng)
    dist = distance_to_geodesic(dom, geo, centers, resolution)
    ok = np.flatnonzero(dist > 0.05 + 2 * margin)[:n]
    for i in ok:
        r = min(max_radius, (dist[i] - 2 * margin) * rng.uniform(0.2, 0.95))
        yield centers[i], float(r)


@dataclass
class SlimnessReport:
    max_required_delta: float
    witness: tuple
    values: list = field(default_factory=list)


def _segment(dom, p, q) -> Geodesic:
    return Geodesic(dom, p, q)


def triangle_slimness(dom: ConvexDomain, x, y, z, samples: int = 64,
                      resolution: float = 0.01) -> float:
    """Least r with [x, y] inside N_r([x, z]) union N_r([z, y]) on a sampled [x, y]."""
    xy = _segment(dom, x, y)
    lo, hi = xy.param_range()
    pts = xy.vectors(np.linspace(lo, hi, samples))
    need = np.full(samples, np.inf)
    for p, q in ((x, z), (z, y)):
        if ProjectivePoint(_rows(p)[0]) == ProjectivePoint(_rows(q)[0]):
            d = hilbert_distances(dom, pts, _rows(p))
        else:
            d = distance_to_geodesic(dom, _segment(dom, p, q), pts, resolution)
        need = np.minimum(need, d)
    return float(np.max(need))


def slimness_profile(dom: ConvexDomain, geo: Geodesic, triangles, samples: int = 64,
                     resolution: float = 0.01) -> SlimnessReport:
    """Max over (x, y, z) triangles (x, y on geo) of the slimness constant."""
    best, witness, values = -1.0, None, []
    for x, y, z in triangles:
        r = triangle_slimness(dom, x, y, z, samples, resolution)
        values.append(r)
        if r > best:
            best, witness = r, (x, y, z)
    return SlimnessReport(best, witness, values)


def geodesic_collinearity_check(dom: ConvexDomain, w1, w2, w3, tol: float = 1e-8) -> bool:
    """Whether hil(w1, w2) = hil(w1, w3) + hil(w3, w2) within tol."""
    d12 = hilbert_distance(dom, w1, w2)
    d13 = hilbert_distance(dom, w1, w3)
    d32 = hilbert_distance(dom, w3, w2)
    return abs(d12 - d13 - d32) <= tol


def diagnostic_rows(scenario: str, geodesic_id: str, seed: int, metrics: dict, witness=None) -> list:
    """CSV-ready rows: scenario, geodesic, seed, metric, value, witness coordinates."""
    w = "" if witness is None else " ".join(f"{c:.17g}" for c in np.ravel(witness))
    return [{"scenario": scenario, "geodesic": geodesic_id, "seed": seed, "metric": k,
             "value": float(v), "witness": w} for k, v in metrics.items()]
