"""Curvature-type tensors on R^{2m} with a complex structure, plus pointwise jet identities.

Conventions:

* Basis ``e_0, ..., e_{2m-1}`` with ``J e_{2a} = e_{2a+1}``.
* A (3,1) tensor ``Q`` is stored by its 4-index form ``T[i,j,k,l] = g(Q(e_i,e_j)e_k, e_l)``.
* Scal(T) = sum_{ij} T(e_i, e_j, e_i, e_j). Sectional curvature is K(X, Y) = R(X, Y, X, Y)
  for an orthonormal pair.
* The Hermitian-orthonormal frame of T^{1,0} is ``zeta_k = (e_{2k} - i J e_{2k}) / sqrt(2)``.
* Source frames for jets are ``z_a = (e_a - i J e_a) / 2``.
* A jet stores the coefficients of ``d^{1,0}f(z_a)`` and ``d^{1,0}f(conj z_a)`` in the
  target frame ``zeta``. Under these conventions the identity map has ``f_1 = 1/sqrt(2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class CurvatureError(ValueError):
    pass


# ---------------------------------------------------------------- structure


def complex_structure(m: int) -> np.ndarray:
    J = np.zeros((2 * m, 2 * m))
    for a in range(m):
        J[2 * a + 1, 2 * a] = 1.0
        J[2 * a, 2 * a + 1] = -1.0
    return J


def unitary_frame(m: int) -> np.ndarray:
    """Rows are zeta_k expressed in the real basis."""
    Z = np.zeros((m, 2 * m), dtype=complex)
    r = 1.0 / np.sqrt(2.0)
    for k in range(m):
        Z[k, 2 * k] = r
        Z[k, 2 * k + 1] = -1j * r
    return Z


@dataclass(frozen=True)
class CurvTensor:
    m: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.asarray(self.entries, dtype=float)
        d = 2 * self.m
        if e.shape != (d, d, d, d):
            raise CurvatureError(f"dimension: expected shape {(d,) * 4}")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def symmetry_residuals(self) -> dict[str, float]:
        T = self.entries
        return {
            "antisym12": float(np.abs(T + T.transpose(1, 0, 2, 3)).max()),
            "antisym34": float(np.abs(T + T.transpose(0, 1, 3, 2)).max()),
            "pair_swap": float(np.abs(T - T.transpose(2, 3, 0, 1)).max()),
            "bianchi": float(np.abs(bianchi_sum(T)).max()),
        }

    def is_curvature_type(self, tol: float = 1e-12) -> bool:
        return max(self.symmetry_residuals().values()) <= tol

    def kahler_residual(self) -> float:
        """max |T(X, Y, JZ, JW) - T(X, Y, Z, W)| over basis vectors."""
        J = complex_structure(self.m)
        TJ = np.einsum("ijab,ak,bl->ijkl", self.entries, J, J)
        return float(np.abs(TJ - self.entries).max())

    def __add__(self, other: "CurvTensor") -> "CurvTensor":
        return CurvTensor(self.m, self.entries + other.entries)

    def __sub__(self, other: "CurvTensor") -> "CurvTensor":
        return CurvTensor(self.m, self.entries - other.entries)

    def __mul__(self, c: float) -> "CurvTensor":
        return CurvTensor(self.m, c * self.entries)

    __rmul__ = __mul__

    def __neg__(self) -> "CurvTensor":
        return CurvTensor(self.m, -self.entries)

    def evaluate(self, x, y, z, w) -> complex:
        """Multilinear extension to complex vectors in the real basis."""
        return complex(np.einsum("ijkl,i,j,k,l->", self.entries, x, y, z, w))


def bianchi_sum(T: np.ndarray) -> np.ndarray:
    # T(X,Y,Z,W) + T(Y,Z,X,W) + T(Z,X,Y,W)
    return T + T.transpose(2, 0, 1, 3) + T.transpose(1, 2, 0, 3)


def I_operator(m: int) -> np.ndarray:
    """op[i, j, k, :] = I(e_i, e_j) e_k = g(e_i, e_k) e_j - g(e_j, e_k) e_i."""
    d = 2 * m
    g = np.eye(d)
    return np.einsum("ik,jl->ijkl", g, g) - np.einsum("jk,il->ijkl", g, g)


def IC_operator(m: int) -> np.ndarray:
    """I_C = (I + I(J., J.) + 2 g(J., .) J) / 4."""
    J = complex_structure(m)
    I = I_operator(m)
    IJ = np.einsum("ai,bj,abkl->ijkl", J, J, I)
    # g(J e_i, e_j) = J[j, i], and J e_k has components J[l, k]
    term = 2.0 * np.einsum("ji,lk->ijkl", J, J)
    return (I + IJ + term) / 4.0


def I_tensor(m: int) -> CurvTensor:
    return CurvTensor(m, I_operator(m))


def IC_tensor(m: int) -> CurvTensor:
    return CurvTensor(m, IC_operator(m))


def inner(T: CurvTensor, S: CurvTensor) -> float:
    return float(np.sum(T.entries * S.entries))


def scal(T: CurvTensor) -> float:
    return float(np.einsum("ijij->", T.entries))


def scal_C(T: CurvTensor, strict: bool = True) -> float:
    Z = unitary_frame(T.m)
    val = np.einsum("ijkl,ai,bj,ak,bl->", T.entries, Z, Z, Z.conj(), Z.conj())
    if strict and abs(val.imag) > 1e-12 * max(1.0, abs(val)):
        raise CurvatureError("complexified scalar curvature is not real")
    return float(val.real)


def complexified_identity_residual(T: CurvTensor) -> float:
    Q = IC_tensor(T.m) - I_tensor(T.m)
    return abs(inner(Q, T) + 6.0 * scal_C(T))


def kahler_projection_residual(T: CurvTensor) -> float:
    """|<I_C - I, T>|. It vanishes when T is of Kähler type."""
    return abs(inner(IC_tensor(T.m) - I_tensor(T.m), T))


def project_curvature_type(A: np.ndarray) -> np.ndarray:
    T = A - A.transpose(1, 0, 2, 3)
    T = T - T.transpose(0, 1, 3, 2)
    T = 0.5 * (T + T.transpose(2, 3, 0, 1))
    return T - bianchi_sum(T) / 3.0


def random_curvature_tensor(m: int, rng: np.random.Generator) -> CurvTensor:
    d = 2 * m
    return CurvTensor(m, project_curvature_type(rng.normal(size=(d, d, d, d))))


def random_kahler_tensor(m: int, rng: np.random.Generator, terms: int = 3) -> CurvTensor:
    """Real combination of pullbacks of I_C under random complex-linear maps."""
    d = 2 * m
    base = IC_operator(m)
    out = np.zeros((d, d, d, d))
    for _ in range(terms):
        M = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        A = np.zeros((d, d))
        A[0::2, 0::2] = M.real
        A[1::2, 1::2] = M.real
        A[1::2, 0::2] = M.imag
        A[0::2, 1::2] = -M.imag
        out += rng.normal() * np.einsum("abcd,ai,bj,ck,dl->ijkl", base, A, A, A, A)
    return CurvTensor(m, out)


# ---------------------------------------------------------------- vector-valued symmetric tensors


@dataclass(frozen=True)
class VectorSym2:
    m: int
    d: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (2 * self.m, 2 * self.m, self.d):
            raise CurvatureError("dimension: VectorSym2 entries have the wrong shape")
        if np.abs(e - e.transpose(1, 0, 2)).max() > 1e-12 * max(1.0, np.abs(e).max()):
            raise CurvatureError("VectorSym2 must be symmetric")
        e = 0.5 * (e + e.transpose(1, 0, 2))
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def trace(self) -> np.ndarray:
        return np.einsum("iid->d", self.entries)

    def j_conjugate(self) -> np.ndarray:
        """h(JX, JY)."""
        J = complex_structure(self.m)
        return np.einsum("ai,bj,abd->ijd", J, J, self.entries)

    def part11(self) -> np.ndarray:
        return 0.5 * (self.entries + self.j_conjugate())

    def norm_sq(self) -> float:
        return float(np.sum(self.entries**2))

    @classmethod
    def random(cls, m: int, d: int, rng: np.random.Generator, trace_free: bool = False) -> "VectorSym2":
        a = rng.normal(size=(2 * m, 2 * m, d))
        a = a + a.transpose(1, 0, 2)
        if trace_free:
            a -= np.einsum("iid->d", a)[None, None, :] * np.eye(2 * m)[:, :, None] / (2 * m)
        return cls(m, d, a)


def stQ_apply(Q: CurvTensor, h: VectorSym2) -> VectorSym2:
    """(stQ h)(X, Y) = sum_i h(Q(e_i, X) Y, e_i)."""
    if Q.m != h.m:
        raise CurvatureError("dimension: tensor and VectorSym2 differ in m")
    out = np.einsum("ixyl,lid->xyd", Q.entries, h.entries)
    return VectorSym2(h.m, h.d, 0.5 * (out + out.transpose(1, 0, 2)))


def stQ_raw(Q: CurvTensor, h: VectorSym2) -> np.ndarray:
    """stQ without re-symmetrization, for checking that it preserves symmetry."""
    return np.einsum("ixyl,lid->xyd", Q.entries, h.entries)


def jinv_identity_residual(h: VectorSym2) -> float:
    if np.abs(h.trace()).max() > 1e-12 * max(1.0, np.abs(h.entries).max()):
        raise CurvatureError("not-trace-free: h must be trace free")
    Q = IC_tensor(h.m) - I_tensor(h.m)
    return float(np.abs(stQ_raw(Q, h) + 1.5 * h.part11()).max())


# ---------------------------------------------------------------- jets


@dataclass(frozen=True)
class MapJet:
    """First jet of a map at a point, given by coefficient arrays of shape (m, n)."""

    f: np.ndarray
    fbar: np.ndarray

    def __post_init__(self) -> None:
        f = np.atleast_2d(np.asarray(self.f, dtype=complex)).copy()
        fb = np.atleast_2d(np.asarray(self.fbar, dtype=complex)).copy()
        if f.shape != fb.shape:
            raise CurvatureError("dimension: f and fbar must share shape (m, n)")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "fbar", fb)

    @property
    def m(self) -> int:
        return self.f.shape[0]

    @property
    def n(self) -> int:
        return self.f.shape[1]

    def scaled(self, c: complex) -> "MapJet":
        return MapJet(c * self.f, c * self.fbar)

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """d^{1,0}f(z_a) and d^{1,0}f(conj z_a) as complex vectors in R^{2n} (x) C."""
        Z = unitary_frame(self.n)
        return self.f @ Z, self.fbar @ Z

    def complex_differential(self) -> np.ndarray:
        """Rows are df(z_a) = d^{1,0}f(z_a) + conj(d^{1,0}f(conj z_a))."""
        Fa, Fb = self.vectors()
        return Fa + Fb.conj()

    def real_differential(self) -> np.ndarray:
        """(2n x 2m) matrix of df in the real bases."""
        dz = self.complex_differential()
        D = np.zeros((2 * self.n, 2 * self.m))
        D[:, 0::2] = (2.0 * dz.real).T
        D[:, 1::2] = (-2.0 * dz.imag).T
        return D

    @classmethod
    def from_real_differential(cls, D: np.ndarray, m: int, n: int) -> "MapJet":
        D = np.asarray(D, dtype=float)
        Zs = unitary_frame(m)
        Zt = unitary_frame(n)
        # z_a = zeta_a / sqrt(2) on the source; coefficients via the Hermitian frame of the target
        src = Zs / np.sqrt(2.0)
        dfz = (D @ src.T).T  # rows df(z_a), complex vectors in R^{2n}
        dfzb = (D @ src.conj().T).T
        f = dfz @ Zt.conj().T
        fbar = dfzb @ Zt.conj().T
        return cls(f, fbar)


def _hip(x: np.ndarray, y: np.ndarray) -> complex:
    return complex(np.sum(x * np.conj(y)))


def energy_densities(jet: MapJet) -> tuple[float, float]:
    return 2.0 * float(np.sum(np.abs(jet.f) ** 2)), 2.0 * float(np.sum(np.abs(jet.fbar) ** 2))


def energy_density(jet: MapJet) -> float:
    a, b = energy_densities(jet)
    return a + b


def omega_pairing(jet: MapJet) -> float:
    ep, epp = energy_densities(jet)
    return 2.0 * (ep - epp)


def omega_pairing_frame_sum(jet: MapJet) -> float:
    """sum_{ij} f*omega(e_i, e_j) omega(e_i, e_j), from the real differential."""
    D = jet.real_differential()
    Js, Jt = complex_structure(jet.m), complex_structure(jet.n)
    # omega(X, Y) = g(JX, Y)
    pulled = (Jt @ D).T @ D
    return float(np.sum(pulled * Js.T))


def rprs(jet: MapJet) -> tuple[float, float]:
    """Closed expressions for R' and R'' in terms of the jet coefficients."""
    fa, fb = jet.f, jet.fbar
    ep, epp = energy_densities(jet)
    Gaa = fa @ fa.conj().T  # <f_a, f_b>
    Gbb = fb @ fb.conj().T
    Gab = fa @ fb.conj().T  # <f_a, fbar_b>
    r1 = 0.5 * float(np.sum(np.abs(Gaa) ** 2) - np.sum(np.abs(Gab) ** 2)) + ep * (ep - epp) / 8.0
    r2 = 0.5 * float(np.sum(np.abs(Gbb) ** 2) - np.sum(np.abs(Gab) ** 2)) + epp * (epp - ep) / 8.0
    return r1, r2


def target_curvature(n: int) -> CurvTensor:
    return -IC_tensor(n)


def rprs_bruteforce(jet: MapJet) -> tuple[float, float]:
    """R' = sum R(df z_a, df conj z_a, F_b, conj F_b) with R = -I_C, by explicit frame sums."""
    R = target_curvature(jet.n)
    Fa, Fb = jet.vectors()
    dz = jet.complex_differential()
    r1 = r2 = 0j
    for a in range(jet.m):
        for b in range(jet.m):
            r1 += R.evaluate(dz[a], dz[a].conj(), Fa[b], Fa[b].conj())
            r2 += R.evaluate(dz[a], dz[a].conj(), Fb[b].conj(), Fb[b])
    return r1.real, r2.real


def pluriharmonic_obstruction(jet: MapJet, a: int, b: int) -> float:
    """Half of (|wedge difference|^2 + |pairing difference|^2), indices starting at 0."""
    fa, fb = jet.f, jet.fbar
    X = np.outer(fa[a], fb[b].conj()) - np.outer(fa[b], fb[a].conj())
    c = _hip(fa[a], fb[b]) - _hip(fa[b], fb[a])
    return 0.5 * (float(np.sum(np.abs(X) ** 2)) + abs(c) ** 2)


def pluriharmonic_obstruction_bruteforce(jet: MapJet, a: int, b: int) -> float:
    """-f*R^n(z_a, z_b, conj z_a, conj z_b)."""
    R = target_curvature(jet.n)
    dz = jet.complex_differential()
    return -R.evaluate(dz[a], dz[b], dz[a].conj(), dz[b].conj()).real


class JetClass(str, enum.Enum):
    HOLOMORPHIC = "Holomorphic-like"
    ANTIHOLOMORPHIC = "Antiholomorphic-like"
    LOWRANK = "LowRank"
    MIXED = "Mixed"


@dataclass(frozen=True)
class RankReport:
    real_rank: int
    complex_rank_holo: int
    complex_rank_antiholo: int
    classification: JetClass
    obstruction: float


def _rank(a: np.ndarray, tol: float) -> int:
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))


def rank_diagnostics(jet: MapJet, tol: float = 1e-10) -> RankReport:
    real_rank = _rank(jet.real_differential(), tol)
    r1, r2 = _rank(jet.f, tol), _rank(jet.fbar, tol)
    ep, epp = energy_densities(jet)
    obstruction = max(
        (pluriharmonic_obstruction(jet, a, b) for a in range(jet.m) for b in range(jet.m)), default=0.0
    )
    if real_rank <= 1:
        cls = JetClass.LOWRANK
    elif epp <= tol:
        cls = JetClass.HOLOMORPHIC
    elif ep <= tol:
        cls = JetClass.ANTIHOLOMORPHIC
    else:
        cls = JetClass.MIXED
    return RankReport(real_rank, r1, r2, cls, obstruction)


# ---------------------------------------------------------------- Eells-Sampson integrand


def pullback_tensor(jet: MapJet, R: CurvTensor | None = None) -> np.ndarray:
    R = target_curvature(jet.n) if R is None else R
    D = jet.real_differential()
    return np.einsum("abcd,ai,bj,ck,dl->ijkl", R.entries, D, D, D, D)


def scal_pullback(jet: MapJet) -> float:
    return float(np.einsum("ijij->", pullback_tensor(jet)))


def scal_pullback_framesum(jet: MapJet) -> float:
    """Scal(f*R^n) by looping over frame pairs and pushing each vector forward."""
    R = target_curvature(jet.n)
    D = jet.real_differential()
    total = 0.0
    for i in range(2 * jet.m):
        for j in range(2 * jet.m):
            x, y = D[:, i], D[:, j]
            total += R.evaluate(x, y, x, y).real
    return total


def eells_sampson_density(jet: MapJet, hessian: VectorSym2, ricci_scale: float | None = None) -> float:
    """-|hess|^2 + Scal(f*R^n) - <df o Ric, df>, where Ric = ricci_scale * Id."""
    if hessian.m != jet.m or hessian.d != 2 * jet.n:
        raise CurvatureError("dimension: hessian does not match the jet")
    if ricci_scale is None:
        ricci_scale = -0.5 * (jet.m + 1)
    D = jet.real_differential()
    return -hessian.norm_sq() + scal_pullback(jet) - ricci_scale * float(np.sum(D * D))


def cauchy_schwarz_defect(e: float, second_norm_sq: float, paired_norm_sq: float) -> float:
    """(|second jet|^2 e - |pairing with the first jet|^2) / (2 e^2)."""
    if e <= 0:
        raise CurvatureError("energy density must be positive")
    return (second_norm_sq * e - paired_norm_sq) / (2.0 * e * e)


def random_jet(m: int, n: int, rng: np.random.Generator) -> MapJet:
    shape = (m, n)
    f = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    fbar = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return MapJet(f, fbar)


LEMMA_TOL = 1e-10


def verify_lemmas(m: int, trials: int = 100, seed: int = 0, n: int | None = None) -> dict[str, float]:
    """Largest residual of each identity suite over ``trials`` random inputs."""
    if m < 1:
        raise CurvatureError("dimension: m must be positive")
    rng = np.random.default_rng(seed)
    n = m + 1 if n is None else n
    worst = {"jinv": 0.0, "kahler_projection": 0.0, "complexified_identity": 0.0,
             "pairing_two_routes": 0.0, "rprs_bruteforce": 0.0}
    for _ in range(trials):
        worst["jinv"] = max(worst["jinv"], jinv_identity_residual(VectorSym2.random(m, 2, rng, trace_free=True)))
        worst["kahler_projection"] = max(worst["kahler_projection"],
                                         kahler_projection_residual(random_kahler_tensor(m, rng)))
        worst["complexified_identity"] = max(worst["complexified_identity"],
                                             complexified_identity_residual(random_curvature_tensor(m, rng)))
        jet = random_jet(m, n, rng)
        worst["pairing_two_routes"] = max(worst["pairing_two_routes"],
                                          abs(omega_pairing(jet) - omega_pairing_frame_sum(jet)))
        a, b = rprs(jet), rprs_bruteforce(jet)
        worst["rprs_bruteforce"] = max(worst["rprs_bruteforce"], abs(a[0] - b[0]), abs(a[1] - b[1]))
    return worst
