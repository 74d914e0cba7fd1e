"""Properly convex domains in P(R^d) with membership, chord, support and face
oracles.

Every domain carries a covector ``phi`` that is positive on its closure (the
proper-convexity certificate).  Points are lifted to the affine chart
{phi = 1}; chords are computed as *exit parameters*: for a lift x and a
direction D, the smallest t > 0 with x + t D on the boundary.  Working with
exit parameters instead of chord endpoints keeps Hilbert distances accurate
for points whose distance to the boundary is far below machine epsilon.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.spatial import ConvexHull

from hglab.errors import (
    BadCartanData,
    BadDimensions,
    BadExponent,
    CoincidentPoints,
    DomainFormatError,
    NotInterior,
    NotOnBoundary,
    NotProximalEnough,
    UnsupportedRepresentation,
)
from hglab.projlin import (
    AffineChart,
    ProjectiveHyperplane,
    ProjectiveMap,
    ProjectivePoint,
    as_matrix,
    line_angles,
    unit,
)

POLY_TOL = 1e-10
HULL_TOL = 1e-8
SUPPORT_TOL = 1e-8


class Location(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


class Classification(str, enum.Enum):
    C1_EXTREME = "C1_extreme"
    NON_C1 = "non_C1"
    IN_SEGMENT_INTERIOR = "in_segment_interior"
    IN_SEGMENT_CLOSURE = "in_segment_closure"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class BoundaryPoint:
    point: ProjectivePoint
    supports: tuple
    classification: Classification
    confidence: str  # "exact" or "sampled"


@dataclass(frozen=True)
class FaceDescriptor:
    dimension: int
    span: np.ndarray
    active_constraints: tuple = ()
    sampled: bool = False


@dataclass(frozen=True)
class BoundarySegment:
    endpoints: tuple
    dimension: int = 1
    sampled: bool = False


def _rows(p) -> np.ndarray:
    if isinstance(p, ProjectivePoint):
        return p.coords[None, :]
    if isinstance(p, (list, tuple)) and p and isinstance(p[0], ProjectivePoint):
        return np.vstack([q.coords for q in p])
    return np.atleast_2d(np.asarray(p, dtype=float))


class ConvexDomain:
    """Base class; subclasses implement ``_margins`` and ``_exit``."""

    kind = "abstract"
    tol = POLY_TOL
    sampled = False

    def __init__(self, d: int, phi, witness):
        self.d = int(d)
        phi = np.asarray(phi, dtype=float)
        self.phi = phi / np.linalg.norm(phi)
        w = np.asarray(witness.coords if isinstance(witness, ProjectivePoint) else witness, float)
        if w @ self.phi < 0:
            w = -w
        self.witness = ProjectivePoint(w)
        self._witness_lift = w / (w @ self.phi)

    # -- lifting -----------------------------------------------------------
    def lift(self, X) -> np.ndarray:
        """Lift rows to the chart {phi = 1}; rows with phi = 0 become nan."""
        X = _rows(X)
        s = X @ self.phi
        with np.errstate(divide="ignore", invalid="ignore"):
            out = X / s[:, None]
        out[~(np.abs(s) > 0)] = np.nan
        return out

    @property
    def chart(self) -> AffineChart:
        return AffineChart.from_covector(self.phi)

    # -- to implement ------------------------------------------------------
    def _margins(self, Xh: np.ndarray) -> np.ndarray:
        """Signed margin of lifted rows: >0 interior, 0 boundary, <0 outside."""
        raise NotImplementedError

    def _exit(self, Xh: np.ndarray, D: np.ndarray) -> np.ndarray:
        """Smallest t > 0 with Xh + t D on the boundary (rows, Xh interior)."""
        raise NotImplementedError

    def transform(self, g) -> ConvexDomain:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def supporting_hyperplanes(self, z) -> list:
        raise NotImplementedError

    def face_of(self, z) -> FaceDescriptor:
        raise UnsupportedRepresentation(f"face_of not available for {self.kind}")

    def boundary_segments(self) -> list:
        raise UnsupportedRepresentation(f"boundary_segments not available for {self.kind}")

    def boundary_samples(self, n: int) -> np.ndarray:
        raise NotImplementedError

    # -- shared queries ----------------------------------------------------
    def margins(self, X) -> np.ndarray:
        Xh = self.lift(X)
        m = np.full(Xh.shape[0], -np.inf)
        ok = np.all(np.isfinite(Xh), axis=1)
        if np.any(ok):
            m[ok] = self._margins(Xh[ok])
        return m

    def is_interior(self, X) -> np.ndarray:
        """Strict interior test (no tolerance band); vectorized."""
        return self.margins(X) > 0

    def contains(self, p) -> Location:
        m = float(self.margins(p)[0])
        if m > self.tol:
            return Location.INTERIOR
        if m >= -self.tol:
            return Location.BOUNDARY
        return Location.EXTERIOR

    def chord_params(self, X, Y) -> tuple[np.ndarray, np.ndarray]:
        """Exit parameters (t_a, t_b) of the chord through lifted x, y.

        a = x + t_a (x - y) and b = y + t_b (y - x); non-interior rows give nan.
        """
        Xh = self.lift(X)
        Yh = self.lift(Y)
        Xh, Yh = np.broadcast_arrays(Xh, Yh)
        ok = (self.margins(Xh) > 0) & (self.margins(Yh) > 0)
        ok &= np.any(Xh != Yh, axis=1)
        return self._chord_params_lifted(Xh, Yh, ok)

    def _chord_params_lifted(self, Xh, Yh, ok):
        ta = np.full(Xh.shape[0], np.nan)
        tb = np.full(Xh.shape[0], np.nan)
        if np.any(ok):
            D = Yh[ok] - Xh[ok]
            tb[ok] = self._exit(Yh[ok], D)
            ta[ok] = self._exit(Xh[ok], -D)
        return ta, tb

    def chord(self, x: ProjectivePoint, y: ProjectivePoint):
        """Endpoints (a, b) with a, x, y, b in that order along the line."""
        if x == y:
            raise CoincidentPoints("chord needs two distinct points")
        for p in (x, y):
            if not self.is_interior(p)[0]:
                raise NotInterior(f"{p} is not interior")
        ta, tb = self.chord_params(x, y)
        xh, yh = self.lift(x)[0], self.lift(y)[0]
        a = xh + ta[0] * (xh - yh)
        b = yh + tb[0] * (yh - xh)
        return ProjectivePoint(a), ProjectivePoint(b)

    def ray_exit(self, x, direction_point) -> ProjectivePoint:
        """Boundary point hit by the segment from interior x towards direction_point."""
        xh = self.lift(x)[0]
        q = _rows(direction_point)[0]
        D = q / (q @ self.phi) - xh if abs(q @ self.phi) > 1e-300 else q
        t = self._exit(xh[None, :], D[None, :])[0]
        return ProjectivePoint(xh + t * D)

    def interior_samples(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Random interior points (convex combinations of boundary samples)."""
        B = self.lift(self.boundary_samples(max(64, 4 * self.d)))
        w = rng.dirichlet(np.full(B.shape[0], 0.3), size=n)
        X = w @ B
        X = 0.7 * X + 0.3 * self._witness_lift
        return X / np.linalg.norm(X, axis=1, keepdims=True)

    def _orient(self, cov: np.ndarray) -> np.ndarray:
        """Flip covector rows to be positive on the witness."""
        cov = np.atleast_2d(cov)
        s = np.sign(cov @ self._witness_lift)
        s[s == 0] = 1.0
        return cov * s[:, None]

    def _check_boundary(self, z) -> np.ndarray:
        zh = self.lift(z)[0]
        if not np.all(np.isfinite(zh)):
            raise NotOnBoundary(f"{z} is not on the boundary")
        m = self._margins(zh[None, :])[0]
        if abs(m) > max(self.tol, SUPPORT_TOL) * 10:
            raise NotOnBoundary(f"{z} is not on the boundary (margin {m:.3g})")
        return zh


# ---------------------------------------------------------------------------
# polytopes and hulls
# ---------------------------------------------------------------------------


class Polytope(ConvexDomain):
    """Intersection of half-spaces {alpha_i > 0} (covectors oriented inward)."""

    kind = "polytope"

    def __init__(self, halfspaces, witness=None, phi=None):
        F = np.atleast_2d(np.asarray(halfspaces, dtype=float))
        F = F / np.linalg.norm(F, axis=1, keepdims=True)
        d = F.shape[1]
        if np.linalg.matrix_rank(F) < d:
            raise DegeneratePolytope("half-spaces do not cut out a properly convex cone")
        if witness is None:
            witness = _polytope_witness(F)
        w = np.asarray(witness.coords if isinstance(witness, ProjectivePoint) else witness, float)
        vals = F @ w
        if np.all(vals < 0):
            w = -w
            vals = -vals
        if not np.all(vals > 0):
            raise DegeneratePolytope("witness does not satisfy the half-spaces")
        if phi is None:
            phi = F.sum(axis=0)
        self.facets = F
        super().__init__(d, phi, w)
        self.facets = self._orient(F)

    def _margins(self, Xh):
        return np.min(Xh @ self.facets.T, axis=1)

    def _exit(self, Xh, D):
        A = Xh @ self.facets.T
        B = D @ self.facets.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(B < 0, A / -B, np.inf)
        return np.min(t, axis=1)

    def transform(self, g):
        m = as_matrix(g)
        inv = np.linalg.inv(m)
        return Polytope(self.facets @ inv, witness=m @ self.witness.coords,
                        phi=self.phi @ inv)

    def to_json(self):
        return {"type": "polytope", "d": self.d, "halfspaces": self.facets.tolist(),
                "witness": self.witness.coords.tolist(), "phi": self.phi.tolist()}

    def active(self, z, tol=None) -> np.ndarray:
        zh = self.lift(z)[0]
        vals = self.facets @ zh
        return np.flatnonzero(np.abs(vals) <= (tol if tol is not None else SUPPORT_TOL))

    def supporting_hyperplanes(self, z):
        self._check_boundary(z)
        return [ProjectiveHyperplane(self.facets[i]) for i in self.active(z)]

    def face_of(self, z):
        self._check_boundary(z)
        idx = self.active(z)
        act = self.facets[idx]
        rank = np.linalg.matrix_rank(act, tol=1e-9) if idx.size else 0
        _, s, vt = np.linalg.svd(act) if idx.size else (None, np.array([]), np.eye(self.d))
        span = vt[rank:].T
        return FaceDescriptor(self.d - 1 - rank, span, tuple(int(i) for i in idx))

    def vertices(self) -> np.ndarray:
        """Vertices as unit rows (lifted sign), found by facet enumeration."""
        if getattr(self, "_vertices", None) is not None:
            return self._vertices
        out = []
        for combo in combinations(range(self.facets.shape[0]), self.d - 1):
            sub = self.facets[list(combo)]
            _, s, vt = np.linalg.svd(sub)
            if s[-1] < 1e-12:
                continue
            v = vt[-1]
            if v @ self.phi < 0:
                v = -v
            vh = v / (v @ self.phi)
            if np.all(self.facets @ vh >= -1e-10):
                if not any(np.allclose(v, u, atol=1e-9) for u in out):
                    out.append(v)
        V = np.array(out)
        if self.d == 3:
            V = V[_cyclic_order(self, V)]
        self._vertices = V
        return V

    def boundary_segments(self):
        if self.d != 3:
            return [BoundarySegment(tuple(ProjectivePoint(v) for v in self._facet_vertices(i)),
                                    dimension=self.d - 2, sampled=self.sampled)
                    for i in range(self.facets.shape[0])]
        V = self.vertices()
        n = V.shape[0]
        return [BoundarySegment((ProjectivePoint(V[i]), ProjectivePoint(V[(i + 1) % n])),
                                sampled=self.sampled) for i in range(n)]

    def _facet_vertices(self, i):
        V = self.vertices()
        Vh = self.lift(V)
        return V[np.abs(Vh @ self.facets[i]) < 1e-9]

    def boundary_samples(self, n):
        if self.d != 3:
            V = self.vertices()
            rng = np.random.default_rng(0)
            pts = [V]
            for i in range(self.facets.shape[0]):
                fv = self.lift(self._facet_vertices(i))
                w = rng.dirichlet(np.ones(fv.shape[0]), size=max(1, n // self.facets.shape[0]))
                pts.append(w @ fv)
            P = np.vstack(pts)
            return P / np.linalg.norm(P, axis=1, keepdims=True)
        Vh = self.lift(self.vertices())
        return _polygon_samples(Vh, n)


class DegeneratePolytope(BadDimensions):
    pass


def _polytope_witness(F: np.ndarray) -> np.ndarray:
    from scipy.optimize import linprog

    d = F.shape[1]
    # maximize slack s subject to F x >= s, sum(F) x = 1
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-F, np.ones((F.shape[0], 1))])
    b_ub = np.zeros(F.shape[0])
    A_eq = np.append(F.sum(axis=0), 0.0)[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(None, None)] * d + [(None, 1.0)], method="highs")
    if not res.success or res.x[-1] <= 0:
        raise DegeneratePolytope("half-spaces have empty interior")
    return res.x[:-1]


def _cyclic_order(dom: ConvexDomain, V: np.ndarray) -> np.ndarray:
    chart = dom.chart
    u = chart.to_chart(dom.lift(V))
    c = chart.to_chart(dom._witness_lift)
    ang = np.arctan2(u[:, 1] - c[1], u[:, 0] - c[0])
    return np.argsort(ang, kind="stable")


def _polygon_samples(Vh: np.ndarray, n: int) -> np.ndarray:
    """Vertices plus evenly spread points along the closed polygon Vh (lifted)."""
    m = Vh.shape[0]
    nxt = np.roll(Vh, -1, axis=0)
    lengths = np.linalg.norm(nxt - Vh, axis=1)
    total = lengths.sum()
    pts = [Vh]
    extra = max(n - m, 0)
    if extra:
        k = np.floor(extra * lengths / total).astype(int)
        for i in np.flatnonzero(k):
            t = (np.arange(1, k[i] + 1) / (k[i] + 1))[:, None]
            pts.append((1 - t) * Vh[i] + t * nxt[i])
    P = np.vstack(pts)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


class HullDomain(Polytope):
    """Convex hull of sampled boundary points; queries are exact against its
    facets, results are flagged as sampled."""

    kind = "hull"
    tol = HULL_TOL
    sampled = True

    def __init__(self, vertices, facets, witness, phi, smooth_tol=1e-6, segment_factor=20.0,
                 cyclic=False):
        V = np.atleast_2d(np.asarray(vertices, float))
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        s = np.sign(V @ np.asarray(phi, float))
        s[s == 0] = 1.0
        self._vertices = V * s[:, None]
        self.cyclic = bool(cyclic)
        self.smooth_tol = float(smooth_tol)
        self.segment_factor = float(segment_factor)
        super().__init__(facets, witness=witness, phi=phi)

    @classmethod
    def from_points(cls, points, phi, smooth_tol=1e-6, segment_factor=20.0) -> HullDomain:
        """Hull of homogeneous points (rows) in the chart {phi = 1} via Qhull."""
        P = np.atleast_2d(np.asarray(points, float))
        phi = unit(phi)
        if np.any(P @ phi <= 0):
            s = np.sign(P @ phi)
            if np.any(s == 0):
                raise DegeneratePolytope("points meet the chart's infinity hyperplane")
            P = P * s[:, None]
        chart = AffineChart.from_covector(phi)
        u = chart.to_chart(P)
        hull = ConvexHull(u)
        verts = hull.vertices  # counterclockwise for 2-d hulls
        eq = hull.equations  # n.u + c <= 0 inside
        inv = np.linalg.inv(chart.frame)
        facets = -(eq @ inv)
        center = u[verts].mean(axis=0)
        witness = chart.lift(center)[0]
        return cls(P[verts], facets, witness, phi, smooth_tol, segment_factor,
                   cyclic=u.shape[1] == 2)

    @classmethod
    def from_cyclic_vertices(cls, V, phi, smooth_tol=1e-6, segment_factor=20.0) -> HullDomain:
        """Polygon (d = 3) from vertices already in cyclic order on a convex curve."""
        V = np.atleast_2d(np.asarray(V, float))
        s = np.sign(V @ phi)
        V = V * s[:, None]
        F = np.cross(V, np.roll(V, -1, axis=0))
        F = F / np.linalg.norm(F, axis=1, keepdims=True)
        Vh = V / (V @ phi)[:, None]
        witness = Vh.mean(axis=0)
        return cls(V, F, witness, phi, smooth_tol, segment_factor, cyclic=True)

    def vertices(self):
        if self.d == 3 and not self.cyclic:
            self._vertices = self._vertices[_cyclic_order(self, self._vertices)]
            self.cyclic = True
        return self._vertices

    def transform(self, g):
        m = as_matrix(g)
        inv = np.linalg.inv(m)
        return HullDomain(self.vertices() @ m.T, self.facets @ inv, m @ self.witness.coords,
                          self.phi @ inv, self.smooth_tol, self.segment_factor, cyclic=self.cyclic)

    def to_json(self):
        return {"type": "hull", "d": self.d, "vertices": self.vertices().tolist(),
                "facets": self.facets.tolist(), "witness": self.witness.coords.tolist(),
                "phi": self.phi.tolist(), "smooth_tol": self.smooth_tol,
                "segment_factor": self.segment_factor}

    def active(self, z, tol=None):
        zh = self.lift(z)[0]
        vals = self.facets @ zh
        scale = np.linalg.norm(zh)
        return np.flatnonzero(np.abs(vals) <= (tol if tol is not None else HULL_TOL * scale))

    def supporting_hyperplanes(self, z):
        self._check_boundary(z)
        idx = self.active(z)
        return [ProjectiveHyperplane(c) for c in _merge_covectors(self.facets[idx], self.smooth_tol)]

    def _vertex_index(self, z, tol=1e-9):
        V = self.vertices()
        ang = line_angles(_rows(z), V)[0]
        i = int(np.argmin(ang))
        return i if ang[i] <= tol else None

    def face_of(self, z):
        self._check_boundary(z)
        if self.d != 3:
            fd = super().face_of(z)
            return FaceDescriptor(fd.dimension, fd.span, fd.active_constraints, sampled=True)
        idx = tuple(int(i) for i in self.active(z))
        zc = _rows(z)[0]
        if self._vertex_index(z) is not None:
            return FaceDescriptor(0, zc[:, None], idx, sampled=True)
        for seg in self.boundary_segments():
            a, b = seg.endpoints
            if _on_segment(self, zc, a.coords, b.coords):
                return FaceDescriptor(1, np.column_stack([a.coords, b.coords]), idx, sampled=True)
        return FaceDescriptor(0, zc[:, None], idx, sampled=True)

    def boundary_segments(self):
        if self.d != 3:
            raise UnsupportedRepresentation("segment detection implemented for d = 3 hulls")
        V = self.vertices()
        Vh = self.lift(V)
        u = self.chart.to_chart(Vh)
        nxt = np.roll(u, -1, axis=0)
        lengths = np.linalg.norm(nxt - u, axis=1)
        med = np.median(lengths)
        n = V.shape[0]
        long = lengths > self.segment_factor * med
        segs = []
        visited = np.zeros(n, bool)
        for start in range(n):
            if not long[start] or visited[start]:
                continue
            # extend through collinear neighbours
            j = start
            while True:
                visited[j] = True
                k = (j + 1) % n
                d1 = nxt[j] - u[j]
                d2 = nxt[k] - u[k]
                turn = abs(np.arctan2(d1[0] * d2[1] - d1[1] * d2[0], d1 @ d2))
                if long[k] and not visited[k] and turn < 1e-6:
                    j = k
                else:
                    break
            segs.append(BoundarySegment((ProjectivePoint(V[start]), ProjectivePoint(V[(j + 1) % n])),
                                        sampled=True))
        return segs

    def boundary_samples(self, n):
        V = self.vertices()
        if self.d == 3:
            return _polygon_samples(self.lift(V), n)
        return V


def _on_segment(dom, z, a, b, tol=1e-9) -> bool:
    zh, ah, bh = dom.lift(np.vstack([z, a, b]))
    M = np.vstack([ah, bh]).T
    coef, *_ = np.linalg.lstsq(M, zh, rcond=None)
    resid = np.linalg.norm(M @ coef - zh)
    return bool(resid < tol * max(1.0, np.linalg.norm(zh)) and np.all(coef > tol))


def _merge_covectors(C: np.ndarray, tol: float) -> list:
    out = []
    for c in C:
        c = unit(c)
        for i, e in enumerate(out):
            if line_angles(c[None, :], e[None, :])[0, 0] <= tol:
                out[i] = unit(e + c)
                break
        else:
            out.append(c)
    return out


# ---------------------------------------------------------------------------
# ellipsoids
# ---------------------------------------------------------------------------


class Ellipsoid(ConvexDomain):
    """{[v] : v^T Q v < 0} for a symmetric Q with exactly one negative eigenvalue."""

    kind = "ellipsoid"

    def __init__(self, form, witness=None):
        Q = np.asarray(form, dtype=float)
        Q = 0.5 * (Q + Q.T)
        ev, U = np.linalg.eigh(Q)
        if np.sum(ev < 0) != 1 or np.any(np.abs(ev) < 1e-14 * np.max(np.abs(ev))):
            raise BadDimensions("form must be nondegenerate with signature (d-1, 1)")
        self.form = Q
        self._eig = (ev, U)
        if witness is None:
            witness = U[:, 0]
        w = np.asarray(witness.coords if isinstance(witness, ProjectivePoint) else witness, float)
        if w @ Q @ w >= 0:
            raise NotInterior("ellipsoid witness must satisfy v^T Q v < 0")
        phi = -(Q @ w)
        super().__init__(Q.shape[0], phi, w)

    def quad(self, X):
        return np.sum((X @ self.form) * X, axis=1)

    def _margins(self, Xh):
        XQ = Xh @ self.form
        q = np.sum(XQ * Xh, axis=1)
        g = np.sqrt(np.sum(XQ * XQ, axis=1))
        return -q / (2.0 * g)

    def _exit(self, Xh, D):
        XQ = Xh @ self.form
        a = self.quad(D)
        b = 2.0 * np.sum(XQ * D, axis=1)
        c = np.sum(XQ * Xh, axis=1)
        disc = np.maximum(b * b - 4 * a * c, 0.0)
        sq = np.sqrt(disc)
        q = -0.5 * (b + np.where(b >= 0, sq, -sq))
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where(a != 0, q / a, np.inf)
            r2 = np.where(q != 0, c / q, np.inf)
        r1 = np.where(r1 > 0, r1, np.inf)
        r2 = np.where(r2 > 0, r2, np.inf)
        return np.minimum(r1, r2)

    def transform(self, g):
        m = as_matrix(g)
        inv = np.linalg.inv(m)
        return Ellipsoid(inv.T @ self.form @ inv, witness=m @ self.witness.coords)

    def to_json(self):
        return {"type": "ellipsoid", "d": self.d, "form": self.form.tolist(),
                "witness": self.witness.coords.tolist()}

    def supporting_hyperplanes(self, z):
        zh = self._check_boundary(z)
        return [ProjectiveHyperplane(self._orient(self.form @ zh)[0])]

    def face_of(self, z):
        self._check_boundary(z)
        return FaceDescriptor(0, _rows(z)[0][:, None], ())

    def boundary_segments(self):
        return []

    strictly_convex = True

    def boundary_samples(self, n):
        ev, U = self._eig
        time = U[:, 0] / np.sqrt(-ev[0])
        space = U[:, 1:] / np.sqrt(ev[1:])
        k = self.d - 1
        if k == 2:
            th = 2 * np.pi * np.arange(n) / n
            S = np.column_stack([np.cos(th), np.sin(th)])
        else:
            rng = np.random.default_rng(0)
            S = rng.standard_normal((n, k))
            S /= np.linalg.norm(S, axis=1, keepdims=True)
        P = time[None, :] + S @ space.T
        return P / np.linalg.norm(P, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# graph domain
# ---------------------------------------------------------------------------


class GraphDomain(ConvexDomain):
    """Chart domain |x|^p < y < 2 - |x| in P(R^3), optionally moved by a map."""

    kind = "graph"

    def __init__(self, p: float, transform=None):
        if not p > 1:
            raise BadExponent(f"graph exponent must exceed 1, got {p}")
        self.p = float(p)
        M = np.eye(3) if transform is None else np.asarray(as_matrix(transform), float)
        self.M = M
        self.Minv = np.linalg.inv(M)
        phi = np.array([0.0, 0.0, 1.0]) @ self.Minv
        witness = M @ np.array([0.0, 1.0, 1.0])
        super().__init__(3, phi, witness)
        self.phi = phi / np.linalg.norm(phi)

    def _base(self, Xh):
        V = Xh @ self.Minv.T
        return V[:, 0] / V[:, 2], V[:, 1] / V[:, 2], V[:, 2]

    def _margins(self, Xh):
        x, y, w = self._base(Xh)
        ax = np.abs(x)
        m = np.minimum(y - ax ** self.p, 2.0 - ax - y)
        return np.where(w > 0, m, -np.inf)

    def _exit(self, Xh, D):
        hi = np.ones(Xh.shape[0])
        for _ in range(200):
            out = self._margins(Xh + hi[:, None] * D) <= 0
            if np.all(out):
                break
            hi = np.where(out, hi, 2 * hi)
        lo = np.zeros_like(hi)
        for _ in range(1100):
            mid = 0.5 * (lo + hi)
            inside = self._margins(Xh + mid[:, None] * D) > 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
            if np.all(hi - lo <= 1e-15 * hi):
                break
        return hi

    def transform(self, g):
        return GraphDomain(self.p, as_matrix(g) @ self.M)

    def to_json(self):
        return {"type": "graph", "d": 3, "p": self.p, "transform": self.M.tolist(),
                "witness": self.witness.coords.tolist()}

    def _base_point(self, z):
        v = self.Minv @ _rows(z)[0]
        return v[0] / v[2], v[1] / v[2]

    def _base_supports(self, x, y):
        p = self.p
        tol = 1e-9
        out = []
        on_curve = abs(y - abs(x) ** p) <= tol
        on_right = abs(y - (2 - x)) <= tol and x >= -tol
        on_left = abs(y - (2 + x)) <= tol and x <= tol
        if on_curve:
            s = p * np.sign(x) * abs(x) ** (p - 1)
            out.append(np.array([-s, 1.0, s * x - y]))
        if on_right:
            out.append(np.array([-1.0, -1.0, 2.0]))
        if on_left:
            out.append(np.array([1.0, -1.0, 2.0]))
        return out

    def supporting_hyperplanes(self, z):
        self._check_boundary(z)
        x, y = self._base_point(z)
        covs = self._base_supports(x, y)
        covs = [c @ self.Minv for c in covs]
        return [ProjectiveHyperplane(c) for c in self._orient(np.array(covs))]

    def boundary_samples(self, n):
        k = max(n // 2, 8)
        xs = np.linspace(-1, 1, k)
        lower = np.column_stack([xs, np.abs(xs) ** self.p, np.ones(k)])
        m = max(n - k, 4) // 2
        t = np.linspace(0, 1, m + 2)[1:-1]
        right = np.column_stack([1 - t, 1 + t, np.ones(m)])
        left = np.column_stack([-(1 - t), 1 + t, np.ones(m)])
        P = np.vstack([lower, right, left]) @ self.M.T
        return P / np.linalg.norm(P, axis=1, keepdims=True)

    def boundary_point_at(self, x: float) -> ProjectivePoint:
        """Point (x, |x|^p) of the lower boundary curve."""
        return ProjectivePoint(self.M @ np.array([x, abs(x) ** self.p, 1.0]))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def classify_boundary_point(dom: ConvexDomain, z: ProjectivePoint) -> BoundaryPoint:
    supports = tuple(dom.supporting_hyperplanes(z))
    confidence = "sampled" if dom.sampled else "exact"
    if isinstance(dom, GraphDomain):
        x, y = dom._base_point(z)
        on_curve = abs(y - abs(x) ** dom.p) <= 1e-9
        if len(supports) > 1:
            cls = Classification.NON_C1
        elif on_curve:
            cls = Classification.C1_EXTREME
        else:
            cls = Classification.IN_SEGMENT_INTERIOR
        return BoundaryPoint(z, supports, cls, confidence)
    face = dom.face_of(z)
    if face.dimension >= 1:
        cls = Classification.IN_SEGMENT_INTERIOR
    elif len(supports) > 1:
        cls = Classification.NON_C1
    else:
        cls = Classification.C1_EXTREME
        if not isinstance(dom, Ellipsoid):
            for seg in dom.boundary_segments():
                if any(z == e for e in seg.endpoints):
                    cls = Classification.IN_SEGMENT_CLOSURE
                    break
    return BoundaryPoint(z, supports, cls, confidence)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


class EmbeddedSimplex(Polytope):
    """Standard k-simplex living in P(span(e_1..e_{k+1})) inside P(R^d)."""

    kind = "polytope"

    def __init__(self, k: int, d: int):
        self.k = k
        self.ambient_d = d
        super().__init__(np.eye(k + 1), witness=np.ones(k + 1))

    def _intrinsic(self, p):
        X = _rows(p)
        if np.any(np.abs(X[:, self.k + 1:]) > 1e-12):
            return None
        return X[:, : self.k + 1]

    def contains(self, p):
        X = self._intrinsic(p)
        if X is None:
            return Location.EXTERIOR
        return super().contains(X)

    def supporting_hyperplanes(self, z):
        X = self._intrinsic(z)
        if X is None:
            raise NotOnBoundary(f"{z} is outside the simplex span")
        out = []
        for h in super().supporting_hyperplanes(X):
            out.append(ProjectiveHyperplane(np.concatenate([h.covector, np.zeros(self.ambient_d - self.k - 1)])))
        return out

    def face_of(self, z):
        X = self._intrinsic(z)
        if X is None:
            raise NotOnBoundary(f"{z} is outside the simplex span")
        fd = super().face_of(X)
        return fd

    def vertices_ambient(self) -> np.ndarray:
        return np.eye(self.ambient_d)[: self.k + 1]


def build_simplex(k: int, d: int) -> Polytope:
    """Standard projective k-simplex spanned by [e_1], ..., [e_{k+1}]."""
    if not (2 <= k + 1 <= d):
        raise BadDimensions(f"need 2 <= k+1 <= d, got k={k}, d={d}")
    if k + 1 == d:
        return Polytope(np.eye(d), witness=np.ones(d))
    return EmbeddedSimplex(k, d)


def build_klein_ball(d: int) -> Ellipsoid:
    """Beltrami-Klein model: x_1^2 + ... + x_{d-1}^2 - x_d^2 < 0."""
    if d < 2:
        raise BadDimensions("Klein ball needs d >= 2")
    Q = np.eye(d)
    Q[-1, -1] = -1.0
    return Ellipsoid(Q, witness=np.eye(d)[-1])


def klein_null_frame() -> np.ndarray:
    """Basis change P with P^-1 b_t P = diag(e^t, 1, e^-t) for Klein boosts in d = 3."""
    r = 1 / np.sqrt(2.0)
    return np.array([[r, 0.0, -r], [0.0, 1.0, 0.0], [r, 0.0, r]])


def build_klein_null_disk() -> Ellipsoid:
    """Klein disk written in light-cone coordinates: x_2^2 - 2 x_1 x_3 < 0.

    Boosts along the x_1-axis are diagonal in these coordinates, so points very
    close to their fixed points keep full relative precision.
    """
    Q = np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
    return Ellipsoid(Q, witness=np.array([1.0, 0.0, 1.0]))


def klein_boost(t: float, null: bool = False) -> ProjectiveMap:
    if null:
        return ProjectiveMap(np.diag([math.exp(t), 1.0, math.exp(-t)]))
    c, s = math.cosh(t), math.sinh(t)
    return ProjectiveMap(np.array([[c, 0, s], [0, 1, 0], [s, 0, c]]))


def build_disk_dual_point(n_circle: int = 720) -> HullDomain:
    """Convex hull of the Klein disk and the dual point [0:1:0] of the horizontal axis.

    The tangent lines x = +-1 at the axis endpoints meet at [0:1:0]; the hull is
    taken on the side y > 0 and is bounded in the chart 0.5 y + w = 1.
    """
    n_circle += n_circle % 2  # include theta = 0 and pi exactly
    th = 2 * np.pi * np.arange(n_circle) / n_circle
    circle = np.column_stack([np.cos(th), np.sin(th), np.ones(n_circle)])
    circle[np.abs(circle) < 1e-15] = 0.0
    circle[n_circle // 2] = [-1.0, 0.0, 1.0]
    P = np.vstack([circle, [0.0, 1.0, 0.0]])
    phi = np.array([0.0, 0.5, 1.0])
    return HullDomain.from_points(P, phi, smooth_tol=4 * 2 * np.pi / n_circle)


def build_graph_domain(p: float) -> GraphDomain:
    return GraphDomain(p)


def _coxeter_cartan_matrix(orders, cartan_offdiag) -> np.ndarray:
    m12, m13, m23 = orders
    if not all(int(m) == m and m >= 2 for m in orders):
        raise BadCartanData("orders must be integers >= 2")
    if not (1 / m12 + 1 / m13 + 1 / m23 < 1):
        raise BadCartanData("orders do not give a hyperbolic triangle group")
    c12, c21, c13, c31, c23, c32 = map(float, cartan_offdiag)
    A = np.array([[2.0, c12, c13], [c21, 2.0, c23], [c31, c32, 2.0]])
    for (i, j), m in zip([(0, 1), (0, 2), (1, 2)], (m12, m13, m23)):
        if not (A[i, j] < 0 and A[j, i] < 0):
            raise BadCartanData("off-diagonal Cartan entries must be negative")
        target = 4 * math.cos(math.pi / m) ** 2
        if abs(A[i, j] * A[j, i] - target) > 1e-9:
            raise BadCartanData(f"c_{i + 1}{j + 1} c_{j + 1}{i + 1} must equal 4cos^2(pi/{m})")
    return A


def symmetric_cartan_offdiag(orders) -> tuple:
    m12, m13, m23 = orders
    c = [-2 * math.cos(math.pi / m) for m in (m12, m13, m23)]
    return (c[0], c[0], c[1], c[1], c[2], c[2])


def coxeter_generators(orders, cartan_offdiag) -> list:
    """Reflections sigma_i = Id - v_i (x) alpha_i with v_i = e_i and alpha_i(v_j) = c_ij."""
    A = _coxeter_cartan_matrix(orders, cartan_offdiag)
    gens = []
    for i in range(3):
        s = np.eye(3)
        s[i, :] -= A[i, :]
        gens.append(s)
    return gens


def reduced_words(n_gens: int, depth: int, involutions: bool = True):
    """Reduced words (tuples of generator indices) of length 1..depth, shortlex order."""
    layer = [(i,) for i in range(n_gens)]
    out = list(layer)
    for _ in range(depth - 1):
        layer = [w + (i,) for w in layer for i in range(n_gens) if i != w[-1]]
        out.extend(layer)
    return out


@dataclass
class CoxeterHullData:
    domain: HullDomain
    generators: list
    frame: np.ndarray
    axis: np.ndarray | None = None
    base_points: np.ndarray | None = None
    base_words: list = field(default_factory=list)


def _attracting_points(mats: np.ndarray, ratio: float = 1 + 1e-6):
    ev, vec = np.linalg.eig(mats)
    order = np.argsort(-np.abs(ev), axis=1)
    ev = np.take_along_axis(ev, order, axis=1)
    vec = np.take_along_axis(vec, order[:, None, :], axis=2)
    mod = np.abs(ev)
    ok = (mod[:, 0] > ratio * mod[:, 1]) & (np.abs(ev[:, 0].imag) < 1e-12)
    pts = vec[:, :, 0].real
    return pts, ok


def _sign_consistent(P: np.ndarray):
    M = P.T @ P
    _, U = np.linalg.eigh(M)
    u = U[:, -1]
    for _ in range(5):
        s = np.sign(P @ u)
        s[s == 0] = 1
        P = P * s[:, None]
        u = unit(P.mean(axis=0))
    return P, u


def build_coxeter_hull(orders, cartan_offdiag, depth: int = 12, axis_word=None,
                       min_points: int = 50, deep_scale: float = 1e-40):
    """Hull of attracting fixed points of proximal words of a rank-3 reflection group.

    Returns (HullDomain, generator list).  With ``axis_word`` the whole
    representation is conjugated so that the element for that word is exactly
    diagonal (eigenvalues in decreasing order), and the hull is densified near
    its attracting fixed point [e_1] by images of a fundamental annulus.  The
    generator list then starts with that diagonal element.
    """
    data = coxeter_hull_data(orders, cartan_offdiag, depth, axis_word, min_points, deep_scale)
    gens = [ProjectiveMap(g) for g in data.generators]
    return data.domain, gens


def coxeter_hull_data(orders, cartan_offdiag, depth=12, axis_word=None, min_points=50,
                      deep_scale=1e-40) -> CoxeterHullData:
    gens = coxeter_generators(orders, cartan_offdiag)
    words = reduced_words(3, depth)
    mats = np.empty((len(words), 3, 3))
    cache = {(): np.eye(3)}
    for n, w in enumerate(words):
        m = cache[w[:-1]] @ gens[w[-1]]
        m /= np.abs(np.linalg.det(m)) ** (1 / 3)
        cache[w] = m
        mats[n] = m
    pts, ok = _attracting_points(mats)
    P = pts[ok]
    kept_words = [w for w, k in zip(words, ok) if k]
    if P.shape[0] < min_points:
        raise NotProximalEnough(f"only {P.shape[0]} proximal words at depth {depth}")
    P = P / np.linalg.norm(P, axis=1, keepdims=True)

    frame = np.eye(3)
    axis = None
    if axis_word is not None:
        g = np.eye(3)
        for i in axis_word:
            g = g @ gens[i]
        ev, vec = np.linalg.eig(g)
        if np.any(np.abs(ev.imag) > 1e-12):
            raise NotProximalEnough("axis element must have real spectrum")
        order = np.argsort(-np.abs(ev.real))
        ev, vec = ev.real[order], vec.real[:, order]
        if np.any(ev < 0):
            ev = ev ** 2
            g = g @ g
        frame = vec / np.linalg.norm(vec, axis=0)
        inv = np.linalg.inv(frame)
        gens = [inv @ s @ frame for s in gens]
        P = P @ inv.T
        P = P / np.linalg.norm(P, axis=1, keepdims=True)
        axis = np.diag(ev / np.abs(np.prod(ev)) ** (1 / 3))

    P, u = _sign_consistent(P)
    if np.min(P @ u) <= 1e-6:
        raise BadCartanData("fixed points do not lie in a properly convex cone")
    phi = u
    chart = AffineChart.from_covector(phi)
    hull = ConvexHull(chart.to_chart(P))
    P = P[hull.vertices]  # counterclockwise, near-duplicates merged by Qhull
    base = P.copy()

    if axis is not None:
        P = _densify_near_axis(P, np.diag(axis), phi, deep_scale)

    dom = HullDomain.from_cyclic_vertices(P, phi, smooth_tol=1e-3)
    if axis is not None:
        gens = [axis] + gens
    return CoxeterHullData(dom, gens, frame, axis, base, kept_words)


def _densify_near_axis(P: np.ndarray, lam: np.ndarray, phi: np.ndarray, deep_scale: float):
    """Replace the arc around [e_1] by tiles gamma^i(A), A a fundamental annulus."""
    rho = lam[1] / lam[0]
    sig = lam[2] / lam[0]
    far = np.abs(P[:, 0]) > 1e-6
    a = np.full(P.shape[0], np.inf)
    a[far] = P[far, 1] / P[far, 0]
    s = np.full(P.shape[0], np.inf)
    s[far] = P[far, 2] / P[far, 0]
    a_lo, a_hi = np.min(a[far]), np.max(a[far])
    r0 = 0.5 * min(-a_lo, a_hi)
    near = np.abs(a) < r0
    tile = near & (np.abs(a) >= r0 * rho)
    ta, ts = a[tile], s[tile]
    # base points deeper than the first tile carry eigenvector noise; drop them
    deep_a = [ta]
    deep_s = [ts]
    i = 1
    while r0 * rho ** i > deep_scale and i < 400:
        deep_a.append(ta * rho ** i)
        deep_s.append(ts * sig ** i)
        i += 1
    da = np.concatenate(deep_a)
    ds = np.concatenate(deep_s)
    order = np.argsort(da, kind="stable")
    da, ds = da[order], ds[order]
    keep = np.concatenate([[True], np.diff(da) > 1e-9 * np.abs(da[1:])])
    da, ds = da[keep], ds[keep]
    D = np.column_stack([np.ones_like(da), da, ds])
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    D = D * np.sign(D @ phi)[:, None]
    # splice into the cyclic order at the removed block
    n = P.shape[0]
    # locate the block position: first far index following a near index
    pos = None
    for j in range(n):
        if near[j] and not near[(j + 1) % n]:
            pos = (j + 1) % n
            break
    rolled = np.roll(np.arange(n), -pos)
    far_order = [k for k in rolled if not near[k]]
    # far list now starts right after the near block and ends right before it
    before = P[far_order[-1]]
    before_a = before[1] / before[0] if abs(before[0]) > 1e-6 else -np.inf
    if before_a > 0:
        D = D[::-1]
    return np.vstack([P[far_order], D])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def domain_from_json(obj: dict) -> ConvexDomain:
    try:
        kind = obj["type"]
        if kind == "polytope":
            return Polytope(obj["halfspaces"], witness=obj.get("witness"), phi=obj.get("phi"))
        if kind == "ellipsoid":
            return Ellipsoid(obj["form"], witness=obj.get("witness"))
        if kind == "hull":
            return HullDomain(obj["vertices"], obj["facets"], obj["witness"], obj["phi"],
                              obj.get("smooth_tol", 1e-6), obj.get("segment_factor", 20.0))
        if kind == "graph":
            return GraphDomain(obj["p"], obj.get("transform"))
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainFormatError(f"bad domain JSON: {exc}") from exc
    raise DomainFormatError(f"unknown domain type {obj.get('type')!r}")


def domain_to_json(dom: ConvexDomain) -> dict:
    return dom.to_json()
