"""Pointed domains: sampled Hausdorff distance in the angle metric,
normalization by an inscribed simplex, and rescaling-limit experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from hglab.domains import ConvexDomain, HullDomain, Location, Polytope, _rows
from hglab.errors import DegenerateDomain, DimensionMismatch, NotInterior
from hglab.projlin import ProjectiveMap, ProjectivePoint, as_matrix, cartan


@dataclass(frozen=True)
class PointedDomain:
    domain: ConvexDomain
    point: ProjectivePoint

    def __post_init__(self):
        if self.domain.contains(self.point) != Location.INTERIOR:
            raise NotInterior("pointed domain needs an interior point")


@dataclass(frozen=True)
class DomainDistance:
    value: float
    metric: str = "angle between lines"
    samples: tuple = ()


def _outline(dom: ConvexDomain, samples: int) -> np.ndarray:
    """Boundary outline: exact vertices for polytopes, dense samples otherwise."""
    if isinstance(dom, Polytope):
        V = dom.vertices()
        if dom.d == 3:
            return V
        return dom.boundary_samples(samples)
    return dom.boundary_samples(samples)


def _query_points(dom: ConvexDomain, samples: int) -> np.ndarray:
    if isinstance(dom, Polytope) and dom.d == 3:
        V = dom.lift(dom.vertices())
        mids = 0.5 * (V + np.roll(V, -1, axis=0))
        P = np.vstack([V, mids])
        return P / np.linalg.norm(P, axis=1, keepdims=True)
    return dom.boundary_samples(samples)


def _angle_to_polygon_cone(X: np.ndarray, V: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Angle from each unit row of X (either sign) to the cone over the closed polygon V."""
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    U, W = V, np.roll(V, -1, axis=0)
    uu = np.einsum("ij,ij->i", U, U)
    ww = np.einsum("ij,ij->i", W, W)
    uw = np.einsum("ij,ij->i", U, W)
    det = uu * ww - uw * uw
    out = np.empty(X.shape[0])
    for s in range(0, X.shape[0], chunk):
        best = np.full(min(chunk, X.shape[0] - s), np.inf)
        for sign in (1.0, -1.0):
            x = sign * X[s:s + chunk]
            xu = x @ U.T
            xw = x @ W.T
            with np.errstate(divide="ignore", invalid="ignore"):
                lam = (xu * ww - xw * uw) / det
                mu = (xw * uu - xu * uw) / det
            inside = (lam >= 0) & (mu >= 0) & (det > 0)
            # projection on the 2-d cone, or on the nearer bounding ray
            lam_u = np.maximum(xu, 0.0)
            lam_w = np.maximum(xw, 0.0)
            P2 = lam[..., None] * U[None] + mu[..., None] * W[None]
            Pu = lam_u[..., None] * U[None]
            Pw = lam_w[..., None] * W[None]
            cand = []
            for P, ok in ((P2, inside), (Pu, None), (Pw, None)):
                r = np.linalg.norm(x[:, None, :] - P, axis=2)
                p = np.linalg.norm(P, axis=2)
                ang = np.arctan2(r, p)
                if ok is not None:
                    ang = np.where(ok, ang, np.inf)
                cand.append(ang)
            best = np.minimum(best, np.min(np.minimum(np.minimum(cand[0], cand[1]), cand[2]), axis=1))
        out[s:s + chunk] = best
    return out


def _angle_to_cone_nnls(X: np.ndarray, V: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    for i, x in enumerate(X):
        best = np.inf
        for sign in (1.0, -1.0):
            coef, _ = nnls(V.T, sign * x)
            p = V.T @ coef
            best = min(best, math.atan2(np.linalg.norm(sign * x - p), np.linalg.norm(p)))
        out[i] = best
    return out


def _one_sided(A: ConvexDomain, B: ConvexDomain, samples: int) -> float:
    X = _query_points(A, samples)
    loc = B.margins(X)
    outside = loc < 0.0
    if not np.any(outside):
        return 0.0
    V = _outline(B, 4 * samples)
    Xo = X[outside]
    if B.d == 3:
        if not isinstance(B, Polytope):
            # outline from samples must be in cyclic order around the witness
            from hglab.domains import _cyclic_order

            V = V[_cyclic_order(B, V)]
        return float(np.max(_angle_to_polygon_cone(Xo, B.lift(V))))
    return float(np.max(_angle_to_cone_nnls(Xo, B.lift(V))))


def hausdorff_distance(d1: ConvexDomain, d2: ConvexDomain, samples: int = 2000) -> DomainDistance:
    """Two-sided Hausdorff distance between closures in the angle metric on P(R^d)."""
    if d1.d != d2.d:
        raise DimensionMismatch(f"ambient dimensions {d1.d} and {d2.d} differ")
    v = max(_one_sided(d1, d2, samples), _one_sided(d2, d1, samples))
    return DomainDistance(v, samples=(samples, samples))


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


@dataclass
class Normalization:
    map: ProjectiveMap
    normalized: PointedDomain
    r0: float
    R0: float
    objective: float


def _simplex_objective(Vh: np.ndarray, p: np.ndarray, barrier: float) -> float:
    try:
        c = np.linalg.solve(Vh.T, p)
    except np.linalg.LinAlgError:
        return -math.inf
    if np.any(c <= 0):
        return -math.inf
    det = abs(np.linalg.det(Vh))
    if det <= 0:
        return -math.inf
    return math.log(det) + barrier * float(np.sum(np.log(c)))


def inscribed_simplex(dom: ConvexDomain, point, candidates: int = 240, restarts: int = 50,
                      seed: int = 0, barrier: float = 1e-3) -> tuple[np.ndarray, float]:
    """Greedy large-volume simplex with vertices on the boundary containing point."""
    B = dom.lift(dom.boundary_samples(candidates))
    B = B[np.all(np.isfinite(B), axis=1)]
    p = dom.lift(point)[0]
    d = dom.d
    rng = np.random.default_rng(seed)
    best_idx, best_val = None, -math.inf
    for _ in range(restarts):
        # farthest-point start from a random candidate
        idx = [int(rng.integers(B.shape[0]))]
        while len(idx) < d:
            dist = np.min(np.linalg.norm(B[:, None, :] - B[idx][None], axis=2), axis=1)
            idx.append(int(np.argmax(dist)))
        val = _simplex_objective(B[idx], p, barrier)
        improved = True
        while improved:
            improved = False
            for slot in range(d):
                for j in range(B.shape[0]):
                    if j in idx:
                        continue
                    trial = list(idx)
                    trial[slot] = j
                    v = _simplex_objective(B[trial], p, barrier)
                    if v > val + 1e-12:
                        idx, val, improved = trial, v, True
        if val > best_val:
            best_idx, best_val = idx, val
    if best_idx is None or not math.isfinite(best_val):
        raise DegenerateDomain("no inscribed simplex contains the point")
    return B[best_idx], best_val


def normalize(pd: PointedDomain, seed: int = 0, restarts: int = 50, candidates: int = 240) -> Normalization:
    """Map sending an inscribed simplex to the standard simplex and the point to [1:...:1].

    r0 is the inradius of the standard simplex in the chart sum(x) = 1 about
    its barycenter (guaranteed contained), R0 the largest sampled distance of
    the normalized boundary from the barycenter.
    """
    dom = pd.domain
    Vh, val = inscribed_simplex(dom, pd.point, candidates, restarts, seed)
    p = dom.lift(pd.point)[0]
    g0 = np.linalg.inv(Vh.T)
    c = g0 @ p
    g = np.diag(1.0 / c) @ g0
    gm = ProjectiveMap(g)
    ndom = dom.transform(gm)
    npt = ProjectivePoint(np.ones(dom.d))
    d = dom.d
    center = np.full(d, 1.0 / d)
    S = ndom.boundary_samples(candidates)
    s = S.sum(axis=1)
    if np.any(np.abs(s) < 1e-12):
        R0 = math.inf
    else:
        Y = S / s[:, None]
        R0 = float(np.max(np.linalg.norm(Y - center, axis=1)))
    r0 = 1.0 / math.sqrt(d * (d - 1))
    return Normalization(gm, PointedDomain(ndom, npt), r0, R0, val)


# ---------------------------------------------------------------------------
# rescaling experiments
# ---------------------------------------------------------------------------


@dataclass
class RescaleReport:
    ns: list
    distances: list
    probe_images: list = field(default_factory=list)
    converged: bool = False
    decay_factor: float = 0.1
    threshold: float = 0.01


def conical_rescale(dom: ConvexDomain, maps, candidate: ConvexDomain, probes=(), ns=None,
                    samples: int = 2000, decay_factor: float = 0.1,
                    threshold: float = 0.01) -> RescaleReport:
    """Hausdorff distance of g_n(dom) to a candidate limit, plus probe images."""
    maps = list(maps)
    ns = list(ns) if ns is not None else list(range(len(maps)))
    dists, images = [], []
    for g in maps:
        gd = dom.transform(g)
        dists.append(hausdorff_distance(gd, candidate, samples).value)
        m = as_matrix(g)
        images.append([ProjectivePoint(m @ _rows(p)[0]) for p in probes])
    first, last = dists[0], dists[-1]
    converged = last < threshold and (first == 0 or last < decay_factor * first)
    return RescaleReport(ns, dists, images, bool(converged), decay_factor, threshold)


def build_segment_bulge(c: float = 0.3, n_bulge: int = 40) -> HullDomain:
    """Domain with boundary segment [e2, e3] and convex bulges over the other edges.

    The bulges are p(t) = (1-t) e1 + t e2 - c t(1-t) e3 and its mirror with e2,
    e3 exchanged, so [e1], [e2], [e3] are boundary points and the open segment
    from [e1] to [e2 + e3] is interior.
    """
    t = np.linspace(0.0, 1.0, n_bulge + 1)[1:-1]
    e1, e2, e3 = np.eye(3)
    b12 = (1 - t)[:, None] * e1 + t[:, None] * e2 - (c * t * (1 - t))[:, None] * e3
    b13 = (1 - t)[:, None] * e1 + t[:, None] * e3 - (c * t * (1 - t))[:, None] * e2
    P = np.vstack([e1, e2, e3, b12, b13])
    return HullDomain.from_points(P, np.ones(3), smooth_tol=1e-6)


def segment_rescale_maps(ns) -> list:
    return [ProjectiveMap(np.diag([n ** 2, 1.0 / n, 1.0 / n]), validate=False) for n in ns]


def fit_conic(X: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares symmetric form Q with x^T Q x = 0 on rows of X; returns (Q, residual)."""
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    i, j = np.triu_indices(X.shape[1])
    M = X[:, i] * X[:, j] * np.where(i == j, 1.0, 2.0)
    _, s, vt = np.linalg.svd(M, full_matrices=False)
    q = vt[-1]
    Q = np.zeros((X.shape[1], X.shape[1]))
    Q[i, j] = q
    Q[j, i] = q
    resid = float(np.max(np.abs(np.einsum("ij,jk,ik->i", X, Q, X))))
    return Q, resid


def normalization_distortion(n1: Normalization, n2: Normalization, h) -> float:
    """mu_{1,d} of g2 h g1^-1, the element relating the normalizations of pd and h pd."""
    m = as_matrix(n2.map) @ as_matrix(h) @ np.linalg.inv(as_matrix(n1.map))
    mu = cartan(m)
    return mu.gap(1, mu.d)
