# isokernel/gelfand_testbed.py
"""
Exact Fourier checks on the finite Gelfand pair (D_m, K = {e, s}).

Group elements r^k s^j are indexed by k + m*j, with r^a s^b . r^c s^e = r^{a + (-1)^b c} s^{b+e}.
Irreducible representations are real orthogonal, so pi(g^{-1}) = pi(g)^T. Stored matrices use
M[i, j] = <M e_j, e_i>; the matrix entry written pi_ij(g) = <pi(g) e_i, e_j> is M[j, i].
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from .errors import DomainError
from .settings import Testbed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Irrep:
    name: str
    dim: int
    mats: NDArray[np.float64]        # (|G|, dim, dim)
    spherical: bool
    projection: NDArray[np.float64]  # E_pi^K in the rotated basis

    def phi(self) -> NDArray[np.float64]:
        """Spherical function g -> <e_1, pi(g) e_1>."""
        return self.mats[:, 0, 0].copy()


@dataclass(frozen=True)
class FiniteGelfandPair:
    m: int
    mul: NDArray[np.int64]   # mul[a, b] = index of a.b
    inv: NDArray[np.int64]
    K: tuple[int, ...]
    irreps: tuple[Irrep, ...]

    @property
    def order(self) -> int:
        return 2 * self.m

    @property
    def identity(self) -> int:
        return 0

    @property
    def r(self) -> int:
        return 1

    @property
    def s(self) -> int:
        return self.m

    @property
    def spherical_irreps(self) -> tuple[Irrep, ...]:
        return tuple(p for p in self.irreps if p.spherical)

    def double_cosets(self) -> list[frozenset[int]]:
        seen: dict[frozenset[int], None] = {}
        for g in range(self.order):
            seen.setdefault(self.double_coset(g), None)
        return list(seen)

    def double_coset(self, g: int) -> frozenset[int]:
        return frozenset(int(self.mul[self.mul[k, g], k2]) for k in self.K for k2 in self.K)


@dataclass(frozen=True)
class FiniteMeasure:
    weights: NDArray[np.float64]
    bi_invariant: bool = False

    @classmethod
    def of(cls, pair: FiniteGelfandPair, weights) -> "FiniteMeasure":
        w = np.asarray(weights, dtype=float)
        if w.shape != (pair.order,):
            raise DomainError(f"measure needs {pair.order} weights, got shape {w.shape}")
        return cls(weights=w, bi_invariant=is_left_invariant(pair, w) and is_right_invariant(pair, w))

    @property
    def mass(self) -> float:
        return float(self.weights.sum())


# ---------- construction ----------

def _rotation(angle: float) -> NDArray[np.float64]:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _orient(pair_K: tuple[int, ...], name: str, mats: NDArray) -> Irrep:
    """Rotate the basis so that e_1 spans the K-fixed line when there is one."""
    proj = sum(mats[k] for k in pair_K) / len(pair_K)
    w, V = np.linalg.eigh(proj)
    V = V[:, np.argsort(-w, kind="stable")]
    rotated = np.einsum("ji,gjk,kl->gil", V, mats, V)
    rank = int(np.sum(w > 0.5))
    proj = V.T @ proj @ V
    proj[np.abs(proj) < 1e-15] = 0.0
    return Irrep(name=name, dim=mats.shape[1], mats=rotated, spherical=rank == 1, projection=proj)


def build_dihedral_pair(m: int) -> FiniteGelfandPair:
    if m < 3:
        raise DomainError(f"dihedral order needs m >= 3, got m={m}")
    n = 2 * m
    k = np.arange(n) % m
    j = np.arange(n) // m
    kk = (k[:, None] + np.where(j[:, None] == 1, -1, 1) * k[None, :]) % m
    mul = kk + m * ((j[:, None] + j[None, :]) % 2)
    inv = np.where(j == 1, np.arange(n), (-k) % m)
    K = (0, m)

    def character(values) -> NDArray:
        return np.asarray(values, dtype=float).reshape(n, 1, 1)

    irreps = [
        _orient(K, "trivial", character(np.ones(n))),
        _orient(K, "sign", character((-1.0) ** j)),
    ]
    if m % 2 == 0:
        irreps.append(_orient(K, "alt_r", character((-1.0) ** k)))
        irreps.append(_orient(K, "alt_rs", character((-1.0) ** (k + j))))
    reflect = np.diag([1.0, -1.0])
    for h in range(1, (m - 1) // 2 + 1):
        mats = np.array([_rotation(2.0 * math.pi * h * kg / m) @ (reflect if jg else np.eye(2))
                         for kg, jg in zip(k, j)])
        irreps.append(_orient(K, f"rho_{h}", mats))
    pair = FiniteGelfandPair(m=m, mul=mul, inv=inv, K=K, irreps=tuple(irreps))
    logger.debug(f"built D_{m}: {len(irreps)} irreps, {len(pair.spherical_irreps)} spherical")
    return pair


# ---------- measures ----------

def is_left_invariant(pair: FiniteGelfandPair, w: NDArray, tol: float = 1e-13) -> bool:
    return all(np.max(np.abs(w[pair.mul[k]] - w)) <= tol for k in pair.K)


def is_right_invariant(pair: FiniteGelfandPair, w: NDArray, tol: float = 1e-13) -> bool:
    return all(np.max(np.abs(w[pair.mul[:, k]] - w)) <= tol for k in pair.K)


def average_left(pair: FiniteGelfandPair, w: NDArray) -> NDArray:
    return sum(w[pair.mul[k]] for k in pair.K) / len(pair.K)


def average_right(pair: FiniteGelfandPair, w: NDArray) -> NDArray:
    return sum(w[pair.mul[:, k]] for k in pair.K) / len(pair.K)


def random_measure(pair: FiniteGelfandPair, kind: str, rng: np.random.Generator) -> FiniteMeasure:
    """i.i.d. uniform weights, the K-averaging for `kind`, then normalized to mass 1."""
    w = rng.random(pair.order)
    if kind in ("left", "bi"):
        w = average_left(pair, w)
    if kind in ("right", "bi"):
        w = average_right(pair, w)
    if kind not in ("any", "left", "right", "bi"):
        raise DomainError(f"unknown measure kind {kind!r}")
    return FiniteMeasure.of(pair, w / w.sum())


def point_mass(pair: FiniteGelfandPair, g: int) -> FiniteMeasure:
    w = np.zeros(pair.order)
    w[g] = 1.0
    return FiniteMeasure.of(pair, w)


def haar(pair: FiniteGelfandPair) -> FiniteMeasure:
    return FiniteMeasure.of(pair, np.full(pair.order, 1.0 / pair.order))


def haar_K(pair: FiniteGelfandPair) -> FiniteMeasure:
    w = np.zeros(pair.order)
    w[list(pair.K)] = 1.0 / len(pair.K)
    return FiniteMeasure.of(pair, w)


def convolve(pair: FiniteGelfandPair, mu: NDArray, nu: NDArray) -> NDArray[np.float64]:
    """(mu * nu)({g}) = sum_{hx = g} mu({h}) nu({x})."""
    return np.bincount(pair.mul.ravel(), weights=np.outer(mu, nu).ravel(), minlength=pair.order)


def convolution_operator(pair: FiniteGelfandPair, rho: NDArray) -> NDArray[np.float64]:
    """Matrix of nu -> rho * nu."""
    L = np.zeros((pair.order, pair.order))
    cols = np.broadcast_to(np.arange(pair.order), pair.mul.shape)
    np.add.at(L, (pair.mul, cols), rho[:, None])
    return L


# ---------- transforms ----------

def fourier_transform(pair: FiniteGelfandPair, mu: FiniteMeasure | NDArray, pi: Irrep) -> NDArray[np.float64]:
    """mu^(pi) = sum_g pi(g^{-1}) mu({g})."""
    w = mu.weights if isinstance(mu, FiniteMeasure) else np.asarray(mu, dtype=float)
    return np.einsum("g,gij->ij", w, pi.mats[pair.inv])


def spherical_transform(mu: NDArray, pi: Irrep) -> float:
    return float(pi.phi() @ mu)


def density(pair: FiniteGelfandPair, mu: NDArray) -> NDArray[np.float64]:
    """Radon-Nikodym derivative against normalized counting measure."""
    return pair.order * np.asarray(mu, dtype=float)


def inverse_transform(pair: FiniteGelfandPair, transforms: list[NDArray]) -> NDArray[np.float64]:
    """Weights of the measure whose density is sum_pi d_pi tr(A_pi pi(g))."""
    f = sum(p.dim * np.einsum("ij,gji->g", A, p.mats) for p, A in zip(pair.irreps, transforms))
    return f / pair.order


# ---------- structural checks ----------

def structural_residuals(pair: FiniteGelfandPair) -> dict[str, float]:
    """Unitarity, homomorphism, Schur orthogonality, projection rank, symmetry, commutativity."""
    n = pair.order
    out = {"unitary": 0.0, "homomorphism": 0.0, "projection_rank": 0.0}
    columns = []
    for p in pair.irreps:
        eye = np.eye(p.dim)
        out["unitary"] = max(out["unitary"], float(np.max(np.abs(
            np.einsum("gij,gkj->gik", p.mats, p.mats) - eye))))
        prod = np.einsum("aij,bjk->abik", p.mats, p.mats)
        out["homomorphism"] = max(out["homomorphism"], float(np.max(np.abs(prod - p.mats[pair.mul]))))
        E = p.projection
        rank = int(round(float(np.trace(E))))
        bad = np.max(np.abs(E @ E - E)) + np.max(np.abs(E - E.T))
        if rank > 1 or (rank == 1) != p.spherical:
            bad = math.inf
        out["projection_rank"] = max(out["projection_rank"], float(bad))
        columns.append(math.sqrt(p.dim) * p.mats.reshape(n, -1))
    F = np.concatenate(columns, axis=1)
    out["schur"] = float(np.max(np.abs(F.T @ F / n - np.eye(F.shape[1]))))

    out["symmetric_pair"] = 0.0 if all(
        pair.double_coset(g) == pair.double_coset(int(pair.inv[g])) for g in range(n)) else math.inf
    indicators = []
    for D in pair.double_cosets():
        w = np.zeros(n)
        w[list(D)] = 1.0 / len(D)
        indicators.append(w)
    out["gelfand_commutative"] = max(
        float(np.max(np.abs(convolve(pair, a, b) - convolve(pair, b, a))))
        for a in indicators for b in indicators)
    return out


def check_peter_weyl(pair: FiniteGelfandPair) -> dict[str, float]:
    """
    Gram residuals of the three families sqrt(d) pi_i1, sqrt(d) pi_1j, sqrt(d) phi over spherical
    pi, plus dimension-count mismatches (|G|/|K|, |G|/|K|, number of double cosets).
    """
    n = pair.order
    sph = pair.spherical_irreps
    left = np.column_stack([math.sqrt(p.dim) * p.mats[:, 0, i] for p in sph for i in range(p.dim)])
    right = np.column_stack([math.sqrt(p.dim) * p.mats[:, j, 0] for p in sph for j in range(p.dim)])
    bi = np.column_stack([math.sqrt(p.dim) * p.phi() for p in sph])
    out = {}
    for name, F, target, inv_ok in (
        ("left", left, n // len(pair.K), lambda f: is_left_invariant(pair, f, 1e-12)),
        ("right", right, n // len(pair.K), lambda f: is_right_invariant(pair, f, 1e-12)),
        ("bi", bi, len(pair.double_cosets()),
         lambda f: is_left_invariant(pair, f, 1e-12) and is_right_invariant(pair, f, 1e-12)),
    ):
        gram = float(np.max(np.abs(F.T @ F / n - np.eye(F.shape[1]))))
        invariant = all(inv_ok(F[:, c]) for c in range(F.shape[1]))
        out[f"{name}_gram"] = gram if invariant else math.inf
        out[f"{name}_count"] = float(abs(F.shape[1] - target))
    return out


# ---------- Fourier-structure checks ----------

@dataclass
class FT1Verdict:
    """Per clause (left, right, bi): invariance (a), projection form (b), zero pattern (c)."""
    holds: dict[str, tuple[bool, bool, bool]] = field(default_factory=dict)
    violations: list[tuple[str, str, tuple[int, int]]] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return all(a == b == c for a, b, c in self.holds.values())


def _zero_pattern(M: NDArray, pi: Irrep, clause: str) -> NDArray[np.bool_]:
    """Entries (stored indexing) that must vanish for the clause."""
    must = np.ones(M.shape, dtype=bool)
    if pi.spherical:
        if clause == "left":
            must[:, 0] = False
        elif clause == "right":
            must[0, :] = False
        else:
            must[0, 0] = False
    return must


def check_ft1(pair: FiniteGelfandPair, mu: FiniteMeasure, zero: float = 1e-13) -> FT1Verdict:
    w = mu.weights
    invariance = {
        "left": is_left_invariant(pair, w, zero),
        "right": is_right_invariant(pair, w, zero),
    }
    invariance["bi"] = invariance["left"] and invariance["right"]
    verdict = FT1Verdict()
    for clause, a in invariance.items():
        b_ok = c_ok = True
        for p in pair.irreps:
            M = fourier_transform(pair, w, p)
            E = p.projection
            projected = {"left": M @ E, "right": E @ M, "bi": E @ M @ E}[clause]
            # E = 0 off the spherical dual, so this also forces M = 0 there
            b_ok &= bool(np.max(np.abs(projected - M)) <= zero)
            bad = _zero_pattern(M, p, clause) & (np.abs(M) > zero)
            if np.any(bad):
                c_ok = False
                i, j = map(int, np.argwhere(bad)[0])
                # report in pi_ij = <pi(g) e_i, e_j> indexing, 1-based
                verdict.violations.append((clause, p.name, (j + 1, i + 1)))
        verdict.holds[clause] = (a, b_ok, c_ok)
    return verdict


def check_ft1_converse(pair: FiniteGelfandPair, rng: np.random.Generator, zero: float = 1e-13) -> dict[str, bool]:
    """Build measures from transforms with each clause's zero pattern and test their invariance."""
    out = {}
    scale = 1.0 / (2.0 * pair.order)  # keeps the density positive
    for clause in ("left", "right", "bi"):
        transforms = []
        for p in pair.irreps:
            if p.name == "trivial":
                transforms.append(np.ones((1, 1)))
                continue
            A = scale * rng.uniform(-1.0, 1.0, (p.dim, p.dim))
            A[_zero_pattern(A, p, clause)] = 0.0
            transforms.append(A)
        w = inverse_transform(pair, transforms)
        recovered = max(float(np.max(np.abs(fourier_transform(pair, w, p) - A)))
                        for p, A in zip(pair.irreps, transforms))
        ok = {"left": is_left_invariant(pair, w, zero),
              "right": is_right_invariant(pair, w, zero)}
        ok["bi"] = ok["left"] and ok["right"]
        out[clause] = ok[clause] and recovered <= zero and bool(np.all(w > 0.0))
    return out


@dataclass(frozen=True)
class DensityExpansion:
    brute: NDArray[np.float64]
    dens1: NDArray[np.float64]
    dens1_error: float
    dens2: NDArray[np.float64] | None = None
    dens2_error: float | None = None


def density_expansion(pair: FiniteGelfandPair, mu: FiniteMeasure) -> DensityExpansion:
    """Pointwise sum_pi d_pi tr(mu^(pi) pi(g)) and, for bi-invariant mu, sum d_pi mu^(phi) phi(g)."""
    w = mu.weights
    brute = density(pair, w)
    dens1 = sum(p.dim * np.einsum("ij,gji->g", fourier_transform(pair, w, p), p.mats) for p in pair.irreps)
    out = dict(brute=brute, dens1=dens1, dens1_error=float(np.max(np.abs(dens1 - brute))))
    if mu.bi_invariant:
        dens2 = sum(p.dim * spherical_transform(w, p) * p.phi() for p in pair.spherical_irreps)
        out.update(dens2=dens2, dens2_error=float(np.max(np.abs(dens2 - brute))))
    return DensityExpansion(**out)


def check_spherical_eq(pair: FiniteGelfandPair, pi: Irrep, vector: NDArray | None = None) -> float:
    """max_{g,h} |(1/|K|) sum_k phi(gkh) - phi(g) phi(h)| with phi(g) = <v, pi(g) v>."""
    v = np.eye(pi.dim)[0] if vector is None else np.asarray(vector, dtype=float)
    phi = np.einsum("i,gij,j->g", v, pi.mats, v)
    averaged = sum(phi[pair.mul[pair.mul[:, k]]] for k in pair.K) / len(pair.K)
    return float(np.max(np.abs(averaged - np.outer(phi, phi))))


def check_parseval(pair: FiniteGelfandPair, mu: FiniteMeasure) -> dict[str, float]:
    """(1/|G|) sum |f|^2 against the full and invariant-reduced Plancherel sums."""
    w = mu.weights
    lhs = float(np.sum(density(pair, w) ** 2) / pair.order)
    transforms = {p.name: fourier_transform(pair, w, p) for p in pair.irreps}
    full = sum(p.dim * float(np.sum(transforms[p.name] ** 2)) for p in pair.irreps)
    out = {"full": abs(lhs - full)}
    sph = pair.spherical_irreps
    if is_left_invariant(pair, w):
        out["left"] = abs(lhs - sum(p.dim * float(np.sum(transforms[p.name][:, 0] ** 2)) for p in sph))
    if is_right_invariant(pair, w):
        out["right"] = abs(lhs - sum(p.dim * float(np.sum(transforms[p.name][0, :] ** 2)) for p in sph))
    if mu.bi_invariant:
        out["bi"] = abs(lhs - sum(p.dim * spherical_transform(w, p) ** 2 for p in sph))
    return out


# ---------- compound-Poisson semigroups ----------

def semigroup_measure(pair: FiniteGelfandPair, rho: NDArray, c: float, t: float) -> NDArray[np.float64]:
    """mu_t = e^{-ct} sum_k (ct)^k / k! rho^{*k} * m_K."""
    L = convolution_operator(pair, rho)
    return expm(c * t * (L - np.eye(pair.order))) @ haar_K(pair).weights


def exponents(pair: FiniteGelfandPair, rho: NDArray, c: float) -> dict[str, float]:
    """chi_pi = c (1 - rho^(phi_pi)) for spherical pi."""
    return {p.name: c * (1.0 - spherical_transform(rho, p)) for p in pair.spherical_irreps}


def transition_operator(pair: FiniteGelfandPair, mu: NDArray) -> NDArray[np.float64]:
    """P f(g) = sum_h f(gh) mu({h}) as a matrix acting on function vectors."""
    P = np.zeros((pair.order, pair.order))
    rows = np.broadcast_to(np.arange(pair.order)[:, None], pair.mul.shape)
    np.add.at(P, (rows, pair.mul), np.broadcast_to(mu[None, :], pair.mul.shape))
    return P


def semigroup_check(pair: FiniteGelfandPair, rho: FiniteMeasure, c: float, s: float, t: float) -> dict[str, float]:
    if not rho.bi_invariant or abs(rho.mass - 1.0) > 1e-12:
        raise DomainError("semigroup generator must be a K-bi-invariant probability")
    if not c > 0.0 or s < 0.0 or t < 0.0:
        raise DomainError(f"need c > 0 and s, t >= 0, got c={c}, s={s}, t={t}")
    w = rho.weights
    mu_s, mu_t, mu_st = (semigroup_measure(pair, w, c, u) for u in (s, t, s + t))
    chi = exponents(pair, w, c)
    out = {"convolution": float(np.max(np.abs(convolve(pair, mu_s, mu_t) - mu_st)))}
    out["multiplicative"] = max(
        abs(spherical_transform(mu_st, p) - spherical_transform(mu_s, p) * spherical_transform(mu_t, p))
        for p in pair.spherical_irreps)
    out["exponent"] = max(abs(spherical_transform(mu_t, p) - math.exp(-t * chi[p.name]))
                          for p in pair.spherical_irreps)
    P = transition_operator(pair, mu_t)
    eigen = 0.0
    for p in pair.irreps:
        lam = spherical_transform(mu_t, p) if p.spherical else 0.0
        for i in range(p.dim):
            for j in range(p.dim):
                f = p.mats[:, j, i]  # pi_ij
                expected = lam * f if (p.spherical and i == 0) else np.zeros_like(f)
                eigen = max(eigen, float(np.max(np.abs(P @ f - expected))))
    out["eigen"] = eigen
    return out


def _bi_invariant_basis(pair: FiniteGelfandPair) -> NDArray[np.float64]:
    """Orthonormal double-coset indicators for <f, h> = (1/|G|) sum f h."""
    cols = []
    for D in pair.double_cosets():
        b = np.zeros(pair.order)
        b[list(D)] = math.sqrt(pair.order / len(D))
        cols.append(b)
    return np.column_stack(cols)


def check_kernel_expansion(pair: FiniteGelfandPair, rho: FiniteMeasure, c: float, t: float) -> dict[str, float]:
    """Eigenfunctions, both kernel expansions, and both trace formulas for the testbed semigroup."""
    w = rho.weights
    n = pair.order
    mu_t = semigroup_measure(pair, w, c, t)
    chi = exponents(pair, w, c)
    decay = {name: math.exp(-t * x) for name, x in chi.items()}
    sph = pair.spherical_irreps
    P = transition_operator(pair, mu_t)
    out = {"eigenfunction": max(float(np.max(np.abs(P @ p.phi() - decay[p.name] * p.phi()))) for p in sph)}

    rho_t = density(pair, mu_t)
    g_inv_h = pair.mul[pair.inv[:, None], np.arange(n)[None, :]]
    direct = rho_t[g_inv_h]
    zonal = sum(p.dim * decay[p.name] * p.phi() for p in sph)[g_inv_h]
    entries = sum(p.dim * decay[p.name] * np.einsum("gj,hj->gh", p.mats[:, :, 0], p.mats[:, :, 0]) for p in sph)
    out["kernel_zonal"] = float(np.max(np.abs(direct - zonal)))
    out["kernel_entries"] = float(np.max(np.abs(direct - entries)))

    trace = float(np.trace(P))
    out["trace"] = abs(trace - sum(p.dim * decay[p.name] for p in sph))
    out["trace_diagonal"] = abs(trace - rho_t[pair.identity])
    B = _bi_invariant_basis(pair)
    trace_K = float(np.trace(B.T @ P @ B) / n)
    out["trace_K"] = abs(trace_K - sum(decay.values()))
    return out


def central_bi_invariant(pair: FiniteGelfandPair, w: NDArray) -> NDArray[np.float64]:
    """Average w over the classes generated by conjugation and left/right K-translation."""
    n = pair.order
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int):
        parent[find(a)] = find(b)

    for g in range(n):
        for h in range(n):
            union(g, int(pair.mul[pair.mul[h, g], pair.inv[h]]))
        for k in pair.K:
            union(g, int(pair.mul[k, g]))
            union(g, int(pair.mul[g, k]))
    roots = np.array([find(g) for g in range(n)])
    out = np.empty(n)
    for root in np.unique(roots):
        cls = roots == root
        out[cls] = w[cls].mean()
    return out


def is_central(pair: FiniteGelfandPair, w: NDArray, tol: float = 1e-13) -> bool:
    return all(np.max(np.abs(w[pair.mul[pair.mul[h], pair.inv[h]]] - w)) <= tol for h in range(pair.order))


def random_central_measure(pair: FiniteGelfandPair, rng: np.random.Generator) -> FiniteMeasure:
    w = central_bi_invariant(pair, rng.random(pair.order))
    return FiniteMeasure.of(pair, w / w.sum())


def check_nocent(pair: FiniteGelfandPair, mu: FiniteMeasure | None = None,
                 rng: np.random.Generator | None = None) -> float:
    """
    Largest |mu^(pi)| entry over spherical pi with d_pi > 1. Without `mu` a random central
    bi-invariant probability is drawn from `rng`.
    """
    big = [p for p in pair.spherical_irreps if p.dim > 1]
    if not big:
        raise DomainError("no spherical representation of dimension > 1")
    if mu is None:
        mu = random_central_measure(pair, rng if rng is not None else np.random.default_rng(0))
    return max(float(np.max(np.abs(fourier_transform(pair, mu, p)))) for p in big)


# ---------- trial runner ----------

@dataclass
class TrialReport:
    m: int
    trials: int
    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    first_failure: str | None = None

    def record(self, clause: str, ok: bool, detail: str = ""):
        tally = self.counts.setdefault(clause, {"pass": 0, "fail": 0})
        tally["pass" if ok else "fail"] += 1
        if not ok and self.first_failure is None:
            self.first_failure = f"{clause}{': ' + detail if detail else ''}"
            logger.error(f"D_{self.m}: check failed: {self.first_failure}")

    @property
    def passed(self) -> bool:
        return all(c["fail"] == 0 for c in self.counts.values())

    def as_dict(self) -> dict:
        return {"m": self.m, "trials": self.trials, "pass": self.passed,
                "first_failure": self.first_failure, "clauses": self.counts}


def _structural(pair: FiniteGelfandPair, report: TrialReport, tol: float):
    for name, value in structural_residuals(pair).items():
        report.record(name, value <= tol, f"residual {value:.3g}")
    for name, value in check_peter_weyl(pair).items():
        report.record(f"peter_weyl_{name}", value <= tol, f"residual {value:.3g}")
    # negative controls: each must detect a violation
    flagged = check_ft1(pair, point_mass(pair, pair.r))
    report.record("ft1_detects_noninvariant", flagged.consistent and bool(flagged.violations))
    for p in pair.spherical_irreps:
        if p.dim > 1:
            off = np.ones(p.dim) / math.sqrt(p.dim)
            report.record("spherical_negative_control", check_spherical_eq(pair, p, off) > 1e-6, p.name)


def run_trials(m: int, trials: int, seed: int = 0, config: Testbed | None = None) -> TrialReport:
    """Structural checks once, then every Fourier identity on `trials` random measures."""
    config = config or Testbed()
    tol, zero = config.identity_tol, config.zero_threshold
    pair = build_dihedral_pair(m)
    report = TrialReport(m=m, trials=trials)
    _structural(pair, report, tol)
    for trial in range(trials):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))
        for kind in ("left", "right", "bi"):
            verdict = check_ft1(pair, random_measure(pair, kind, rng), zero)
            ok = verdict.holds[kind] == (True, True, True) and verdict.consistent
            report.record(f"ft1_{kind}", ok, f"trial {trial}, violations {verdict.violations[:1]}")
        for clause, ok in check_ft1_converse(pair, rng, zero).items():
            report.record(f"ft1_converse_{clause}", ok, f"trial {trial}")

        mu_any = random_measure(pair, "any", rng)
        mu_bi = random_measure(pair, "bi", rng)
        report.record("dens1", density_expansion(pair, mu_any).dens1_error <= tol, f"trial {trial}")
        expansion = density_expansion(pair, mu_bi)
        report.record("dens2", expansion.dens2_error is not None and expansion.dens2_error <= tol,
                      f"trial {trial}")
        for mu in (mu_any, mu_bi, random_measure(pair, "left", rng), random_measure(pair, "right", rng)):
            worst = max(check_parseval(pair, mu).values())
            report.record("parseval", worst <= tol, f"trial {trial}, residual {worst:.3g}")
        for p in pair.spherical_irreps:
            report.record("spherical_eq", check_spherical_eq(pair, p) <= tol, f"trial {trial}, {p.name}")

        c = float(rng.uniform(0.5, 2.0))
        s, t = (float(x) for x in rng.uniform(0.1, 1.0, 2))
        for name, value in semigroup_check(pair, mu_bi, c, s, t).items():
            report.record(f"semigroup_{name}", value <= tol, f"trial {trial}, residual {value:.3g}")
        for name, value in check_kernel_expansion(pair, mu_bi, c, t).items():
            report.record(f"kernel_{name}", value <= tol, f"trial {trial}, residual {value:.3g}")

        central = random_central_measure(pair, rng)
        report.record("nocent_hypothesis", central.bi_invariant and is_central(pair, central.weights),
                      f"trial {trial}")
        report.record("nocent", check_nocent(pair, central) <= zero, f"trial {trial}")
        report.record("nocent_negative_control", check_nocent(pair, mu_bi) > 1e-6, f"trial {trial}")
    logger.info(f"D_{m}: {trials} trials, {'all checks pass' if report.passed else 'FAILURES'}")
    return report
