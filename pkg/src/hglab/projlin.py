"""Homogeneous linear algebra on P(R^d): points, hyperplanes, maps, charts,
cross-ratios and Cartan projections (log singular values).

Cartan projections of long products never form the product explicitly.
Instead ``cartan_of_product`` tracks the top singular value of every exterior
power of the running product with a rescale after each factor, so gaps of
size ~1e3 nats stay accurate to ~1e-10.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from hglab.errors import (
    DegenerateQuadruple,
    EmptyProduct,
    IndexOutOfRange,
    NotCollinear,
    Singular,
)

SIGN_TOL = 1e-12
EQ_TOL = 1e-9
COLLINEAR_TOL = 1e-9
SVD_COND_LIMIT = 1e12
# above this condition number the float64 SVD loses ~eps*cond in log sigma_min,
# so singular values are refined in extended precision
REFINE_COND = 1e6
LD = np.longdouble


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its first coordinate with |value| > 1e-12 is positive."""
    big = np.flatnonzero(np.abs(v) > SIGN_TOL)
    if big.size and v[big[0]] < 0:
        return -v
    return v


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError("cannot normalize a zero or non-finite vector")
    return v / n


class ProjectivePoint:
    """A point [v] of P(R^d), stored as a unit vector with canonical sign."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        c = canonical_sign(unit(coords))
        c.setflags(write=False)
        self.coords = c

    @property
    def d(self) -> int:
        return self.coords.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjectivePoint) or other.d != self.d:
            return NotImplemented
        return bool(
            np.allclose(self.coords, other.coords, atol=EQ_TOL, rtol=0)
            or np.allclose(self.coords, -other.coords, atol=EQ_TOL, rtol=0)
        )

    __hash__ = None  # tolerance equality is not transitive

    def __repr__(self) -> str:
        return f"ProjectivePoint({np.array2string(self.coords, precision=6)})"

    def angle(self, other: ProjectivePoint) -> float:
        """Round (angle) metric on P(R^d)."""
        return line_angle(self.coords, other.coords)


class ProjectiveHyperplane:
    """Projectivized kernel of a unit covector (sign canonicalized)."""

    __slots__ = ("covector",)

    def __init__(self, covector):
        c = canonical_sign(unit(covector))
        c.setflags(write=False)
        self.covector = c

    @property
    def d(self) -> int:
        return self.covector.shape[0]

    def evaluate(self, p) -> float:
        v = p.coords if isinstance(p, ProjectivePoint) else np.asarray(p, float)
        return float(self.covector @ v)

    def contains(self, p, tol: float = 1e-8) -> bool:
        return abs(self.evaluate(p)) <= tol

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjectiveHyperplane) or other.d != self.d:
            return NotImplemented
        return bool(
            np.allclose(self.covector, other.covector, atol=EQ_TOL, rtol=0)
            or np.allclose(self.covector, -other.covector, atol=EQ_TOL, rtol=0)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"ProjectiveHyperplane({np.array2string(self.covector, precision=6)})"


class ProjectiveMap:
    """An element of PGL(d, R) represented by an invertible matrix.

    With ``normalize=True`` the matrix is rescaled to |det| = 1.
    """

    __slots__ = ("matrix", "det_normalized")

    def __init__(self, matrix, normalize: bool = True, validate: bool = True):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("ProjectiveMap needs a square matrix")
        if validate or normalize:
            sign, logdet = np.linalg.slogdet(m)
            if sign == 0 or not np.isfinite(logdet):
                raise Singular("matrix is not invertible")
            if normalize:
                m = m * np.exp(-logdet / m.shape[0])
        m.setflags(write=False)
        self.matrix = m
        self.det_normalized = bool(normalize)

    @classmethod
    def identity(cls, d: int) -> ProjectiveMap:
        return cls(np.eye(d))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, p: ProjectivePoint) -> ProjectivePoint:
        return ProjectivePoint(self.matrix @ p.coords)

    def apply_vectors(self, vs: np.ndarray) -> np.ndarray:
        """Apply to rows of ``vs`` (n x d) and renormalize each row."""
        out = np.asarray(vs, float) @ self.matrix.T
        return out / np.linalg.norm(out, axis=-1, keepdims=True)

    def apply_hyperplane(self, h: ProjectiveHyperplane) -> ProjectiveHyperplane:
        # g.H = ker(alpha o g^-1)
        return ProjectiveHyperplane(np.linalg.solve(self.matrix.T, h.covector))

    def inverse(self) -> ProjectiveMap:
        return ProjectiveMap(np.linalg.inv(self.matrix), normalize=self.det_normalized)

    def __matmul__(self, other: ProjectiveMap) -> ProjectiveMap:
        return ProjectiveMap(self.matrix @ other.matrix,
                             normalize=self.det_normalized and other.det_normalized)

    def __repr__(self) -> str:
        return f"ProjectiveMap({np.array2string(self.matrix, precision=4)})"


def as_matrix(g) -> np.ndarray:
    return g.matrix if isinstance(g, ProjectiveMap) else np.asarray(g, dtype=float)


@dataclass(frozen=True)
class CartanVector:
    """Nonincreasing vector of log singular values (nats)."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if np.any(np.diff(mu) > 1e-12):
            raise ValueError("Cartan vector must be nonincreasing")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def d(self) -> int:
        return self.mu.shape[0]

    def gap(self, i: int, j: int) -> float:
        return mu_gap(self, i, j)

    def __len__(self) -> int:
        return self.d


def mu_gap(v: CartanVector, i: int, j: int) -> float:
    """mu_i - mu_j with 1-based indices, 1 <= i <= j <= d."""
    if not (1 <= i <= j <= v.d):
        raise IndexOutOfRange(f"need 1 <= i <= j <= {v.d}, got ({i}, {j})")
    return max(float(v.mu[i - 1] - v.mu[j - 1]), 0.0)


@dataclass(frozen=True)
class AffineChart:
    """Affine chart P(R^d) - H_inf with coordinates u in R^(d-1).

    The homogeneous representative of chart point u is ``frame @ [u, 1]``.
    """

    frame: np.ndarray

    def __post_init__(self):
        f = np.array(self.frame, dtype=float)
        if abs(np.linalg.det(f)) < 1e-14:
            raise Singular("chart frame is not invertible")
        f.setflags(write=False)
        object.__setattr__(self, "frame", f)

    @classmethod
    def standard(cls, d: int) -> AffineChart:
        return cls(np.eye(d))

    @classmethod
    def from_covector(cls, phi) -> AffineChart:
        """Chart {phi = 1} with an orthonormal frame of ker(phi)."""
        phi = np.asarray(phi, dtype=float)
        d = phi.shape[0]
        _, _, vt = np.linalg.svd(phi[None, :])
        kernel = vt[1:].T
        base = phi / (phi @ phi)
        return cls(np.column_stack([kernel, base]).reshape(d, d))

    @property
    def d(self) -> int:
        return self.frame.shape[0]

    @property
    def infinity_hyperplane(self) -> ProjectiveHyperplane:
        return ProjectiveHyperplane(np.linalg.inv(self.frame)[-1])

    def to_chart(self, p) -> np.ndarray:
        v = p.coords if isinstance(p, ProjectivePoint) else np.asarray(p, float)
        w = np.linalg.solve(self.frame, v.T).T
        return w[..., :-1] / w[..., -1:]

    def from_chart(self, u) -> ProjectivePoint:
        u = np.asarray(u, dtype=float)
        return ProjectivePoint(self.frame @ np.append(u, 1.0))

    def lift(self, u) -> np.ndarray:
        """Homogeneous vectors (rows) for chart points (rows of u)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        ones = np.ones((u.shape[0], 1))
        return np.hstack([u, ones]) @ self.frame.T


def line_angle(u, v) -> float:
    """Angle in [0, pi/2] between the lines spanned by u and v."""
    return float(line_angles(np.atleast_2d(u), np.atleast_2d(v))[0, 0])


def line_angles(us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Pairwise angle matrix between the lines spanned by rows of us and vs."""
    us = np.asarray(us, float)
    vs = np.asarray(vs, float)
    us = us / np.linalg.norm(us, axis=1, keepdims=True)
    vs = vs / np.linalg.norm(vs, axis=1, keepdims=True)
    sign = np.where(us @ vs.T >= 0, 1.0, -1.0)
    # chord-length form keeps full accuracy for nearly equal lines
    chord = np.linalg.norm(us[:, None, :] - sign[:, :, None] * vs[None, :, :], axis=2)
    return 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0))


def _pair_det(p: np.ndarray, q: np.ndarray) -> float:
    return float(p[0] * q[1] - p[1] * q[0])


def cross_ratio(a: ProjectivePoint, b: ProjectivePoint,
                x: ProjectivePoint, y: ProjectivePoint) -> float:
    """[a, b; x, y] = |a-y||b-x| / (|a-x||b-y|) for four collinear points."""
    stack = np.vstack([a.coords, b.coords, x.coords, y.coords])
    _, s, vt = np.linalg.svd(stack)
    if stack.shape[1] > 2 and s[2] > COLLINEAR_TOL * s[0]:
        raise NotCollinear(f"points span more than a line (sigma_3 = {s[2]:.3g})")
    basis = vt[:2].T
    pa, pb, px, py = (v @ basis for v in stack)
    pa, pb, px, py = (p / np.linalg.norm(p) for p in (pa, pb, px, py))
    ax = _pair_det(pa, px)
    by = _pair_det(pb, py)
    if abs(ax) < COLLINEAR_TOL or abs(by) < COLLINEAR_TOL:
        raise DegenerateQuadruple("x coincides with a or y coincides with b")
    return abs(_pair_det(pa, py) * _pair_det(pb, px)) / abs(ax * by)


@lru_cache(maxsize=None)
def _subsets(d: int, k: int) -> np.ndarray:
    return np.array(list(combinations(range(d), k)), dtype=int).reshape(-1, k)


def exterior_power(m: np.ndarray, k: int) -> np.ndarray:
    """Matrix of the k-th exterior power in the basis of sorted k-subsets."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    if not 1 <= k <= d:
        raise IndexOutOfRange(f"exterior power index {k} outside 1..{d}")
    if k == 1:
        return m.copy()
    idx = _subsets(d, k)
    sub = m[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(sub)


def _det_ld(A: np.ndarray) -> np.ndarray:
    """Determinants of a stack of square matrices by partial-pivot elimination in long double."""
    A = np.array(A, dtype=LD)
    n = A.shape[-1]
    A = A.reshape(-1, n, n)
    det = np.ones(A.shape[0], dtype=LD)
    rows = np.arange(A.shape[0])
    for c in range(n):
        piv = c + np.argmax(np.abs(A[:, c:, c]), axis=1)
        swap = piv != c
        if np.any(swap):
            r = rows[swap]
            tmp = A[r, c, :].copy()
            A[r, c, :] = A[r, piv[swap], :]
            A[r, piv[swap], :] = tmp
            det[swap] = -det[swap]
        p = A[:, c, c]
        det = det * p
        ok = p != 0
        if c + 1 < n and np.any(ok):
            f = np.zeros((A.shape[0], n - c - 1), dtype=LD)
            f[ok] = A[ok, c + 1:, c] / p[ok, None]
            A[:, c + 1:, c:] -= f[:, :, None] * A[:, None, c, c:]
    return det


def _log_norm_exterior_ld(m: np.ndarray, k: int) -> float:
    """log of the operator norm of the k-th exterior power, minors in long double."""
    d = m.shape[0]
    idx = _subsets(d, k)
    sub = m[idx[:, None, :, None], idx[None, :, None, :]]
    W = _det_ld(sub.reshape(-1, k, k)).reshape(idx.shape[0], idx.shape[0])
    scale = np.max(np.abs(W))
    if scale == 0:
        raise Singular("exterior power vanishes")
    return float(np.log(scale)) + float(np.log(np.linalg.norm((W / scale).astype(float), 2)))


def exterior_power_norm_check(g, k: int) -> float:
    """log of the operator norm of the k-th exterior power of the |det|=1 rescaling of g.

    Equals mu_1 + ... + mu_k; used as an oracle independent of the SVD route.
    Minors and the determinant are evaluated in extended precision, so the
    value stays accurate to ~1e-7 up to condition numbers of order 1e12.
    """
    m = np.asarray(as_matrix(g), dtype=float)
    d = m.shape[0]
    if not 1 <= k <= d:
        raise IndexOutOfRange(f"exterior power index {k} outside 1..{d}")
    det = _det_ld(m)[0]
    if det == 0 or not np.isfinite(det):
        raise Singular("matrix is not invertible")
    logdet = float(np.log(np.abs(det)))
    if k == d:
        return 0.0
    return _log_norm_exterior_ld(m, k) - k * logdet / d


def _det_normalized(m: np.ndarray) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0 or not np.isfinite(logdet):
        raise Singular("matrix is not invertible")
    return m * np.exp(-logdet / m.shape[0])


def _jacobi_log_sv(m: np.ndarray, v: np.ndarray, sweeps: int = 30) -> np.ndarray:
    """Log singular values of m by one-sided Jacobi on m @ v in long double.

    v (right singular vectors from a float64 SVD) is orthogonal to rounding,
    which perturbs the singular values multiplicatively only, and makes the
    columns nearly orthogonal so that a couple of sweeps suffice.
    """
    A = np.asarray(m, dtype=LD) @ np.asarray(v, dtype=LD)
    d = A.shape[1]
    eps = np.finfo(LD).eps
    for _ in range(sweeps):
        rotated = False
        for i in range(d - 1):
            for j in range(i + 1, d):
                a = A[:, i] @ A[:, i]
                b = A[:, j] @ A[:, j]
                c = A[:, i] @ A[:, j]
                if abs(c) <= eps * np.sqrt(a * b):
                    continue
                rotated = True
                zeta = (b - a) / (2 * c)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1 + zeta * zeta)) if zeta != 0 else LD(1)
                cs = 1 / np.sqrt(1 + t * t)
                sn = cs * t
                Ai = A[:, i].copy()
                A[:, i] = cs * Ai - sn * A[:, j]
                A[:, j] = sn * Ai + cs * A[:, j]
        if not rotated:
            break
    norms = np.sqrt(np.sum(A * A, axis=0))
    return np.sort(np.log(norms))[::-1]


def _mu_from_partial_sums(partial: Sequence[float]) -> np.ndarray:
    mu = np.diff(np.concatenate([[0.0], partial]))
    # ties and roundoff can break monotonicity at the 1e-14 level
    for i in range(1, mu.shape[0]):
        if mu[i] > mu[i - 1]:
            mu[i] = mu[i - 1] = 0.5 * (mu[i] + mu[i - 1])
    return mu


def cartan(g) -> CartanVector:
    """Cartan projection of the |det| = 1 rescaling of g."""
    m = np.asarray(as_matrix(g), dtype=float)
    if not np.all(np.isfinite(m)):
        raise Singular("matrix has non-finite entries")
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0 or not np.isfinite(logdet):
        raise Singular("matrix is not invertible")
    d = m.shape[0]
    shift = logdet / d
    _, s, vt = np.linalg.svd(m)
    if s[-1] > 0 and s[0] / s[-1] < REFINE_COND:
        return CartanVector(np.log(s) - shift)
    if s[-1] > 0 and s[0] / s[-1] < SVD_COND_LIMIT:
        ls = _jacobi_log_sv(m, vt.T)
        return CartanVector(_mu_from_partial_sums(np.cumsum(ls - ls.mean())[:-1].tolist() + [0.0]))
    det = _det_ld(m)[0]
    if det == 0 or not np.isfinite(det):
        raise Singular("condition number beyond supported precision")
    shift = float(np.log(np.abs(det))) / d
    partial = [_log_norm_exterior_ld(m, k) - k * shift for k in range(1, d)]
    partial.append(0.0)
    if not np.all(np.isfinite(partial)):
        raise Singular("condition number beyond supported precision")
    return CartanVector(_mu_from_partial_sums(partial))


def cartan_of_product(factors: Iterable) -> CartanVector:
    """Cartan projection of factors[0] @ factors[1] @ ... without forming it.

    Each exterior power of the running product is rescaled after every factor
    and the discarded log-norms are accumulated.
    """
    mats = [_det_normalized(np.asarray(as_matrix(f), dtype=float)) for f in factors]
    if not mats:
        raise EmptyProduct("cartan_of_product needs at least one factor")
    if len(mats) == 1:
        return cartan(mats[0])
    d = mats[0].shape[0]
    partial = []
    for k in range(1, d):
        acc = None
        log_scale = 0.0
        for m in mats:
            w = exterior_power(m, k)
            acc = w if acc is None else acc @ w
            s = np.linalg.norm(acc)
            acc /= s
            log_scale += np.log(s)
        partial.append(log_scale + np.log(np.linalg.norm(acc, 2)))
    partial.append(0.0)
    return CartanVector(_mu_from_partial_sums(partial))


def gaps_table(v: CartanVector) -> dict[str, float]:
    """Consecutive gaps and the extreme gap, keyed like 'mu_1_2'."""
    out = {f"mu_{i}_{i + 1}": mu_gap(v, i, i + 1) for i in range(1, v.d)}
    out[f"mu_1_{v.d}"] = mu_gap(v, 1, v.d)
    return out
