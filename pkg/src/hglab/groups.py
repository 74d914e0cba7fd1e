"""Words in generator sets, orbit balls, tracking sequences, flat directions
and the w_k word family, plus the spectral diagnostics built on them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from hglab.errors import (
    DegenerateWeights,
    ExplosionGuard,
    NotBiproximal,
    NotCommuting,
    RayExitsReach,
)
from hglab.projlin import CartanVector, as_matrix, cartan, cartan_of_product

DEFAULT_BALL_CAP = 200_000


def _is_diagonal(m: np.ndarray, tol: float = 0.0) -> bool:
    off = m - np.diag(np.diag(m))
    return bool(np.max(np.abs(off)) <= tol * np.max(np.abs(m)))


class GeneratorSet:
    """Generators (det-normalized matrices) with optional finite orders.

    Letters are (index, exponent) pairs; generators of order 2 (reflections)
    have exponents reduced mod 2.
    """

    def __init__(self, matrices, orders=None, names=None):
        mats = [np.array(as_matrix(m), dtype=float) for m in matrices]
        self.d = mats[0].shape[0]
        self.matrices = []
        for m in mats:
            if m.shape != (self.d, self.d):
                raise ValueError("generators must share one square shape")
            det = np.linalg.det(m)
            self.matrices.append(m / abs(det) ** (1.0 / self.d))
        self.inverses = [np.linalg.inv(m) for m in self.matrices]
        self.orders = list(orders) if orders is not None else [None] * len(mats)
        self.names = list(names) if names is not None else [f"g{i}" for i in range(len(mats))]
        self.diagonal = [_is_diagonal(m) for m in self.matrices]

    def __len__(self) -> int:
        return len(self.matrices)

    def power(self, i: int, e: int) -> np.ndarray:
        if self.diagonal[i]:
            return np.diag(np.diag(self.matrices[i]) ** e)
        base = self.matrices[i] if e >= 0 else self.inverses[i]
        return np.linalg.matrix_power(base, abs(e))

    def letters(self) -> list:
        """Single-letter steps in canonical order: (i, +1), (i, -1) per generator."""
        out = []
        for i, o in enumerate(self.orders):
            out.append((i, 1))
            if o != 2:
                out.append((i, -1))
        return out

    def reduce(self, word) -> tuple:
        """Free reduction: merge equal neighbours, reduce finite orders, drop zeros."""
        stack: list = []
        for i, e in word:
            if stack and stack[-1][0] == i:
                e = stack.pop()[1] + e
            o = self.orders[i]
            if o is not None:
                e %= o
                if o > 2 and e > o // 2:
                    e -= o
            if e != 0:
                stack.append((i, e))
        return tuple(stack)

    def to_json(self) -> dict:
        return {"matrices": [m.tolist() for m in self.matrices], "orders": self.orders,
                "names": self.names}

    @classmethod
    def from_json(cls, obj: dict) -> GeneratorSet:
        return cls(obj["matrices"], obj.get("orders"), obj.get("names"))


@dataclass(frozen=True)
class GroupElement:
    gens: GeneratorSet
    word: tuple = ()

    @classmethod
    def identity(cls, gens: GeneratorSet) -> GroupElement:
        return cls(gens, ())

    @classmethod
    def letter(cls, gens: GeneratorSet, i: int, e: int = 1) -> GroupElement:
        return cls(gens, gens.reduce([(i, e)]))

    @property
    def length(self) -> int:
        return int(sum(abs(e) for _, e in self.word))

    def __mul__(self, other: GroupElement) -> GroupElement:
        return GroupElement(self.gens, self.gens.reduce(list(self.word) + list(other.word)))

    def inverse(self) -> GroupElement:
        return GroupElement(self.gens, tuple((i, -e) for i, e in reversed(self.word)))

    def quotient(self, other: GroupElement) -> GroupElement:
        """self^-1 * other, reduced as a word (common prefixes cancel exactly)."""
        return self.inverse() * other

    def factors(self) -> list:
        """Factor list for cartan_of_product; diagonal letter powers stay single."""
        out = []
        for i, e in self.word:
            if self.gens.diagonal[i]:
                out.append(self.gens.power(i, e))
            else:
                step = self.gens.matrices[i] if e > 0 else self.gens.inverses[i]
                out.extend([step] * abs(e))
        return out

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(self.gens.d)
        for f in self.factors():
            m = m @ f
            m /= np.max(np.abs(m))
        return m / abs(np.linalg.det(m)) ** (1.0 / self.gens.d)

    def apply(self, X) -> np.ndarray:
        """Apply to row vectors letter by letter (right to left), renormalizing."""
        X = np.atleast_2d(np.asarray(X, dtype=float)).copy()
        for f in reversed(self.factors()):
            X = X @ f.T
            X /= np.linalg.norm(X, axis=1, keepdims=True)
        return X

    def is_diagonal_word(self) -> bool:
        return all(self.gens.diagonal[i] for i, _ in self.word)

    def word_string(self) -> str:
        return " ".join(f"{self.gens.names[i]}^{e}" for i, e in self.word) or "id"


def element_cartan(g: GroupElement) -> CartanVector:
    """Cartan projection of a word; exact for words in diagonal generators."""
    if not g.word:
        return CartanVector(np.zeros(g.gens.d))
    if g.is_diagonal_word():
        logs = np.zeros(g.gens.d)
        for i, e in g.word:
            logs += e * np.log(np.abs(np.diag(g.gens.matrices[i])))
        return CartanVector(np.sort(logs)[::-1])
    return cartan_of_product(g.factors())


def _map_key(m: np.ndarray) -> bytes:
    j = np.argmax(np.abs(m))
    n = m / m.flat[j]
    return np.round(n, 8).tobytes()


def orbit_ball(gens: GeneratorSet, L: int, cap: int = DEFAULT_BALL_CAP) -> list:
    """Reduced words of length <= L in shortlex order, deduplicated by map equality."""
    if L < 0:
        raise ValueError("L must be >= 0")
    ident = GroupElement.identity(gens)
    out = [ident]
    seen = {_map_key(np.eye(gens.d))}
    layer = [(ident, np.eye(gens.d))]
    steps = gens.letters()
    for _ in range(L):
        nxt = []
        for g, m in layer:
            for i, e in steps:
                if g.word and g.word[-1][0] == i and np.sign(g.word[-1][1]) != e:
                    continue
                h = GroupElement(gens, gens.reduce(list(g.word) + [(i, e)]))
                if h.length != g.length + 1:
                    continue
                hm = m @ (gens.matrices[i] if e > 0 else gens.inverses[i])
                hm = hm / np.max(np.abs(hm))
                key = _map_key(hm)
                if key in seen:
                    continue
                seen.add(key)
                out.append(h)
                nxt.append((h, hm))
                if len(out) > cap:
                    raise ExplosionGuard(f"orbit ball exceeds cap {cap}")
        layer = nxt
    return out


@dataclass
class TrackingSequence:
    elements: list
    basepoint: np.ndarray
    ray: object
    residuals: list
    achieved_R: float
    params: list = field(default_factory=list)

    def cartans(self) -> list:
        return [element_cartan(g) for g in self.elements]


def tracking_sequence(dom, gens: GeneratorSet, ray, x0, N: int, L_max: int = 3,
                      candidates=None, fail_threshold: float = np.inf,
                      step: float = 1.0) -> TrackingSequence:
    """For n = 0..N pick the candidate minimizing hil(x0, g^-1 c(n)).

    Candidates default to orbit_ball(gens, L_max).  Ties break by word length,
    then lexicographic word.  c(n) is evaluated at parameter n * step.
    """
    from hglab.hilbert import hilbert_distances

    if candidates is None:
        candidates = orbit_ball(gens, L_max)
    order = sorted(range(len(candidates)),
                   key=lambda k: (candidates[k].length, candidates[k].word))
    candidates = [candidates[k] for k in order]
    x0 = np.asarray(x0.coords if hasattr(x0, "coords") else x0, dtype=float)
    images = np.vstack([g.apply(x0) for g in candidates])
    inside = dom.is_interior(images)
    ts = [n * step for n in range(N + 1)]
    pts = ray.vectors(ts)
    elems, res = [], []
    for n in range(N + 1):
        d = np.full(len(candidates), np.inf)
        d[inside] = hilbert_distances(dom, images[inside], pts[n][None, :])
        k = int(np.argmin(d))  # first minimum = tie-break order
        if d[k] > fail_threshold:
            raise RayExitsReach(f"residual {d[k]:.3g} at n = {n} exceeds {fail_threshold}")
        elems.append(candidates[k])
        res.append(float(d[k]))
    return TrackingSequence(elems, x0, ray, res, float(max(res)), ts)


def axis_candidates(gens: GeneratorSet, axis_index: int, j_max: int, ball: list) -> list:
    """Elements axis^j * h with 0 <= j <= j_max and h from a short orbit ball."""
    out = []
    seen = set()
    for j in range(j_max + 1):
        a = GroupElement.letter(gens, axis_index, j)
        for h in ball:
            g = a * h
            if g.word not in seen:
                seen.add(g.word)
                out.append(g)
    return out


def biproximality_check(g) -> dict:
    """Largest and smallest eigenvalue moduli simple with relative gap > 1e-8."""
    m = g.matrix if isinstance(g, GroupElement) else as_matrix(g)
    mod = np.sort(np.abs(np.linalg.eigvals(m)))[::-1]
    top = mod[0] / mod[1] - 1.0
    bottom = mod[-2] / mod[-1] - 1.0
    return {"biproximal": bool(top > 1e-8 and bottom > 1e-8), "eigen_gaps": (float(top), float(bottom))}


def log_eigen_moduli(g) -> np.ndarray:
    m = g.matrix if isinstance(g, GroupElement) else as_matrix(g)
    m = m / abs(np.linalg.det(m)) ** (1.0 / m.shape[0])
    return np.sort(np.log(np.abs(np.linalg.eigvals(m))))[::-1]


@dataclass
class FlatDirection:
    gens: GeneratorSet
    indices: list
    weights: np.ndarray
    polygon: np.ndarray
    edge: tuple
    v: np.ndarray
    C: float = 0.0

    def exponents(self, n: int) -> np.ndarray:
        """Lattice point with l1 norm n nearest the ray through v."""
        if n == 0:
            return np.zeros(len(self.indices), dtype=int)
        target = n * self.v / np.sum(np.abs(self.v))
        u = np.round(target).astype(int)
        while np.sum(np.abs(u)) != n:
            diff = np.sum(np.abs(u)) - n
            err = target - u
            if diff > 0:
                k = int(np.argmax(np.where(u != 0, -np.sign(u) * err, -np.inf)))
                u[k] -= int(np.sign(u[k]))
            else:
                k = int(np.argmax(np.abs(err)))
                u[k] += int(np.sign(err[k])) or 1
        return u

    def a(self, n: int) -> GroupElement:
        u = self.exponents(n)
        word = [(self.indices[k], int(e)) for k, e in enumerate(u) if e != 0]
        return GroupElement(self.gens, self.gens.reduce(word))


def flat_direction(gens: GeneratorSet, indices, n_check: int = 40) -> FlatDirection:
    """Weight-polygon edge direction of a commuting diagonalizable subgroup.

    Weights are the log-moduli covectors u -> log|lambda_j(a^u)|.  Along the
    outward normal v of a polygon edge (w_i, w_j) the two top weights tie, so
    mu_{1,2} stays bounded while word length grows.
    """
    mats = [gens.matrices[i] for i in indices]
    for p in mats:
        for q in mats:
            if np.max(np.abs(p @ q - q @ p)) > 1e-10 * np.max(np.abs(p)) * np.max(np.abs(q)):
                raise NotCommuting("generators do not commute")
    rng = np.random.default_rng(12345)
    combo = sum(rng.uniform(1, 2) * m for m in mats)
    _, P = np.linalg.eig(combo)
    P = P.real
    Pinv = np.linalg.inv(P)
    W = np.empty((gens.d, len(mats)))
    for k, m in enumerate(mats):
        D = Pinv @ m @ P
        if not _is_diagonal(D, 1e-8):
            raise NotCommuting("no simultaneous eigenbasis found")
        W[:, k] = np.log(np.abs(np.diag(D)))
    if len(mats) != 2:
        raise DegenerateWeights("flat direction implemented for rank-2 groups")
    uniq = np.unique(np.round(W, 12), axis=0)
    if uniq.shape[0] < 3 or np.linalg.matrix_rank(uniq - uniq.mean(axis=0), tol=1e-9) < 2:
        raise DegenerateWeights("weight polygon has empty interior")
    hull = ConvexHull(uniq)
    normals = hull.equations[:, :2]
    ang = np.mod(np.arctan2(normals[:, 1], normals[:, 0]), 2 * np.pi)
    f = int(np.argmin(np.round(ang, 12)))
    v = normals[f] / np.max(np.abs(normals[f]))
    edge = tuple(int(i) for i in hull.simplices[f])
    fd = FlatDirection(gens, list(indices), W, uniq[hull.vertices], edge, v)
    fd.C = max(element_cartan(fd.a(n)).gap(1, 2) for n in range(n_check + 1))
    return fd


def wk_builder(gamma_index: int, flat: FlatDirection, k: int) -> GroupElement:
    """w_0 = id, w_{2m} = a_1 g a_2 g^2 ... a_m g^m, w_{2m+1} = w_{2m} a_{m+1}."""
    gens = flat.gens
    if not biproximality_check(gens.matrices[gamma_index])["biproximal"]:
        raise NotBiproximal("gamma must be biproximal")
    m, odd = divmod(k, 2)
    word: list = []
    for j in range(1, m + 1):
        word += list(flat.a(j).word) + [(gamma_index, j)]
    if odd:
        word += list(flat.a(m + 1).word)
    return GroupElement(gens, gens.reduce(word))


def letter_prefixes(g: GroupElement) -> list:
    """Prefixes of g's word advancing one generator letter at a time."""
    out = [GroupElement.identity(g.gens)]
    acc: list = []
    for i, e in g.word:
        s = 1 if e > 0 else -1
        for _ in range(abs(e)):
            acc.append((i, s))
            out.append(GroupElement(g.gens, g.gens.reduce(acc)))
    return out


def random_rotation(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def counterexample_generators(seed: int = 7) -> GeneratorSet:
    """gamma = q diag(8, 2, 1/2, 1/8) q^-1 with a seeded rotation q, plus the
    diagonal pair a = diag(2, 2, 1/2, 1/2), b = diag(2, 1/2, 2, 1/2)."""
    q = random_rotation(4, seed)
    gamma = q @ np.diag([8.0, 2.0, 0.5, 0.125]) @ q.T
    a = np.diag([2.0, 2.0, 0.5, 0.5])
    b = np.diag([2.0, 0.5, 2.0, 0.5])
    return GeneratorSet([gamma, a, b], names=["gamma", "a", "b"])


def straightness_residual(seq, i: int = 1) -> dict:
    """Empirical constant in mu_i(g_n) + mu_i(g_n^-1 g_{n+m}) <= mu_i(g_{n+m}) + D."""
    elems = seq.elements if isinstance(seq, TrackingSequence) else list(seq)
    if len(elems) < 2:
        raise ValueError("need a sequence of length >= 2")
    d = elems[0].gens.d
    if i not in (1, d - 1):
        raise ValueError("straightness is only asserted for i in {1, d-1}")
    gaps = [element_cartan(g).gap(i, i + 1) for g in elems]
    n_el = len(elems)
    table = np.full((n_el, n_el), np.nan)
    for n in range(n_el):
        for m in range(1, n_el - n):
            q = element_cartan(elems[n].quotient(elems[n + m])).gap(i, i + 1)
            table[n, m] = gaps[n] + q - gaps[n + m]
    D_hat = float(np.nanmax(table))
    return {"D_hat": D_hat, "table": table}


def sv_distance_gap(seq: TrackingSequence, dom) -> dict:
    """Per-n deviation mu_{1,d}(g_n) - 2 hil(x0, g_n x0)."""
    from hglab.hilbert import hilbert_distances

    x0 = seq.basepoint
    vals = []
    for g in seq.elements:
        mu = element_cartan(g)
        h = float(hilbert_distances(dom, x0[None, :], g.apply(x0))[0]) if g.word else 0.0
        vals.append(mu.gap(1, mu.d) - 2.0 * h)
    vals = np.array(vals)
    return {"values": vals, "max_abs": float(np.max(np.abs(vals)))}


def axis_growth_check(gens: GeneratorSet, index: int, j_max: int = 30) -> dict:
    """Growth of mu_{1,2}(g^j) against 0.9 (l1 - l2) j for a biproximal generator."""
    ell = log_eigen_moduli(gens.matrices[index])
    js = np.arange(1, j_max + 1)
    mu12 = np.array([element_cartan(GroupElement.letter(gens, index, int(j))).gap(1, 2) for j in js])
    slope = float(np.polyfit(js, mu12, 1)[0])
    const = float(np.max(0.9 * (ell[0] - ell[1]) * js - mu12))
    return {"slope": slope, "const": const, "mu12": mu12, "ok": slope > 0}


def distance_gap_probe(dom, elements, x0, ks) -> dict:
    """Min mu_{1,2} over elements with hil(x0, g x0) > k, for each k.

    A sampled hull only approximates an invariant domain, so orbit points that
    fall outside it are skipped and counted.
    """
    from hglab.hilbert import hilbert_distances

    x0 = np.asarray(x0, float)
    imgs = np.vstack([g.apply(x0) for g in elements])
    inside = dom.is_interior(imgs)
    dist = np.full(len(elements), np.nan)
    if np.any(inside):
        dist[inside] = hilbert_distances(dom, np.tile(x0, (int(inside.sum()), 1)), imgs[inside])
    mu12 = np.array([element_cartan(g).gap(1, 2) for g in elements])
    mins = [float(np.min(mu12[inside & (dist > k)])) if np.any(inside & (dist > k)) else np.nan
            for k in ks]
    return {"k": list(ks), "min_mu12": mins, "skipped": int(np.sum(~inside))}


def gap_ratio_floor(elements, min_length: int) -> float:
    """Floor of mu_{1,2}/mu_{1,d} over elements of word length >= min_length."""
    vals = []
    for g in elements:
        if g.length >= min_length:
            mu = element_cartan(g)
            if mu.gap(1, mu.d) > 0:
                vals.append(mu.gap(1, 2) / mu.gap(1, mu.d))
    return float(min(vals)) if vals else float("nan")


def tracking_rows(seq: TrackingSequence) -> list:
    """CSV rows: n, word, R_n, mu_{1,2}, mu_{1,d-1}, mu_{1,d}."""
    rows = []
    for n, (g, r) in enumerate(zip(seq.elements, seq.residuals)):
        mu = element_cartan(g)
        d = mu.d
        rows.append({"n": n, "word": g.word_string(), "R_n": r, "mu_1_2": mu.gap(1, 2),
                     "mu_1_dm1": mu.gap(1, d - 1), "mu_1_d": mu.gap(1, d)})
    return rows


def dump_generators(gens: GeneratorSet) -> str:
    return json.dumps(gens.to_json())


def mu(g) -> CartanVector:
    """Cartan projection of a GroupElement or matrix."""
    return element_cartan(g) if isinstance(g, GroupElement) else cartan(g)
