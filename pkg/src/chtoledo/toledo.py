"""Symplectic areas, the corrected pullback integral tau(rho), and rigidity diagnostics.

Orientation convention: the disk carries its complex orientation, mesh triangles are
counterclockwise, and omega(X, JX) > 0. Under this convention the uniformizing
representation of a surface has tau = -2 pi chi > 0.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .chs_models import (
    KahlerPotential,
    PotentialKind,
    align,
    distance_lifts,
    geodesic_lifts,
    hyperboloid,
    lift_omega,
    varsigma_lifts,
)
from .curvature_algebra import MapJet, omega_pairing, unitary_frame
from .harmonic_solver import (
    BoundaryDriftError,
    EquivariantMap,
    SolverConfig,
    SolverError,
    _sgn,
    _tangent_basis,
    log_map,
    minimize,
    model_map,
)
from .hermitian_core import HermitianError, HermitianForm, ProjectiveLift, hform
from .isometry_toolkit import IsometryType
from .mesh import Mesh, build_mesh
from .surface_groups import SurfaceRep, random_su_n1

NEAR_MAXIMAL = 0.99
TOL_REPORT = 0.02
TRUNCATION_TOL = 0.005
CONJUGATION_TOL = 1e-6
ENDPOINT_TOL = 1e-6
PAIRING_TOL = 0.02
DEGENERATE_TOL = 1e-12

AREA_GATE_TRIALS = 1000
AREA_GATE_TOL = 1e-6


class TauError(HermitianError):
    pass


class MilnorWoodViolation(TauError):
    """|tau| exceeded the bound by more than the reporting tolerance."""


# ---------------------------------------------------------------- triangle areas


def _as_vector(p) -> np.ndarray:
    if isinstance(p, ProjectiveLift):
        return np.asarray(p.v, dtype=complex)
    return np.asarray(p, dtype=complex)


def cartan_argument(P0: np.ndarray, P1: np.ndarray, P2: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """arg(-<P0,P1><P1,P2><P2,P0>), batched over leading axes."""
    prod = hform(P0, P1, gram) * hform(P1, P2, gram) * hform(P2, P0, gram)
    return np.angle(-prod)


def _coned_points(P0, P1, P2, u, s, gram):
    top = geodesic_lifts(P1, P2, u, gram)
    return geodesic_lifts(P0, top, s, gram)


def _quadrature_batch(P0, P1, P2, gram, order: int, h: float = 1e-5) -> np.ndarray:
    """Tensor Gauss-Legendre integral of omega over X(u, s) = geo(P0, geo(P1, P2, u), s)."""
    P0, P1, P2 = (np.atleast_2d(P) for P in (P0, P1, P2))
    T, n1 = P0.shape
    x, w = np.polynomial.legendre.leggauss(order)
    nodes = 0.5 * (x + 1.0)
    wts = 0.5 * w
    U, S = np.meshgrid(nodes, nodes, indexing="ij")
    U, S = U.ravel(), S.ravel()
    W = np.outer(wts, wts).ravel()
    k = U.size
    A = np.repeat(P0, k, axis=0)
    B = np.repeat(P1, k, axis=0)
    C = np.repeat(P2, k, axis=0)
    uu = np.tile(U, T)
    ss = np.tile(S, T)
    X = _coned_points(A, B, C, uu, ss, gram)
    Xs = (_coned_points(A, B, C, uu, ss + h, gram) - _coned_points(A, B, C, uu, ss - h, gram)) / (2 * h)
    Xu = (_coned_points(A, B, C, uu + h, ss, gram) - _coned_points(A, B, C, uu - h, ss, gram)) / (2 * h)
    vals = lift_omega(X, Xs, Xu, gram).reshape(T, k)
    return vals @ W


def triangle_area_quadrature(p0, p1, p2, form: HermitianForm | None = None, tol: float = 1e-10) -> float:
    """Reference value: adaptive-order quadrature of omega over the geodesic cone."""
    P = [_as_vector(p) for p in (p0, p1, p2)]
    gram = _gram_for(P[0], form)
    if _degenerate(P[0], P[1], P[2], gram):
        return 0.0
    order = 12
    prev = float(_quadrature_batch(*P, gram, order)[0])
    while order < 96:
        order *= 2
        cur = float(_quadrature_batch(*P, gram, order)[0])
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


def _gram_for(P: np.ndarray, form: HermitianForm | None) -> np.ndarray:
    if form is not None:
        return form.gram
    return HermitianForm.ball(P.shape[-1] - 1).gram


def _degenerate(P0, P1, P2, gram) -> bool:
    d = distance_lifts(np.stack([P0, P1, P2]), np.stack([P1, P2, P0]), gram)
    return bool(np.min(d) < DEGENERATE_TOL)


def _random_disk_triangle(rng: np.random.Generator, micro: bool) -> list[np.ndarray]:
    center = 0.9 * math.sqrt(rng.uniform()) * np.exp(2j * math.pi * rng.uniform())
    spread = 10 ** rng.uniform(-3, -1) if micro else rng.uniform(0.05, 0.6)
    pts = []
    for _ in range(3):
        z = center + spread * (rng.normal() + 1j * rng.normal())
        if abs(z) >= 0.97:
            z = 0.97 * z / abs(z)
        pts.append(np.array([z, 1.0], dtype=complex))
    return pts


def fit_area_constant(samples: int = 50, seed: int = 7) -> float:
    """Least-squares ratio quadrature / Cartan argument on small disk triangles."""
    rng = np.random.default_rng(seed)
    gram = HermitianForm.ball(1).gram
    num = den = 0.0
    for _ in range(samples):
        P = _random_disk_triangle(rng, micro=True)
        q = triangle_area_quadrature(*P)
        a = float(cartan_argument(*P, gram))
        num += q * a
        den += a * a
    return num / den


@dataclass(frozen=True)
class AreaGate:
    constant: float
    fitted: float
    trials: int
    max_error: float
    passed: bool


# frozen after the fit (fit_area_constant() returns 2.0000000000 under the pairing w^* G v)
AREA_CONSTANT = 2.0


@functools.lru_cache(maxsize=1)
def area_gate(trials: int = AREA_GATE_TRIALS, seed: int = 11) -> AreaGate:
    """Compare the closed form with the quadrature oracle on random disk triangles."""
    fitted = fit_area_constant()
    rng = np.random.default_rng(seed)
    gram = HermitianForm.ball(1).gram
    tris = [_random_disk_triangle(rng, micro=(k % 2 == 0)) for k in range(trials)]
    P0, P1, P2 = (np.array([t[i] for t in tris]) for i in range(3))
    ref = _quadrature_batch(P0, P1, P2, gram, 24)
    sub = slice(0, trials, 10)
    ref2 = _quadrature_batch(P0[sub], P1[sub], P2[sub], gram, 32)
    closed = AREA_CONSTANT * cartan_argument(P0, P1, P2, gram)
    err = float(np.max(np.abs(closed - ref)))
    converged = float(np.max(np.abs(ref[sub] - ref2)))
    passed = err <= AREA_GATE_TOL and converged <= AREA_GATE_TOL and abs(fitted - AREA_CONSTANT) < 1e-6
    return AreaGate(AREA_CONSTANT, fitted, trials, err, passed)


class AreaMethod(str, enum.Enum):
    AUTO = "auto"
    CLOSED = "closed"
    QUADRATURE = "quadrature"


def _closed_enabled(method: AreaMethod) -> bool:
    if method is AreaMethod.QUADRATURE:
        return False
    gate = area_gate()
    if method is AreaMethod.CLOSED and not gate.passed:
        raise TauError("closed-form triangle area failed its oracle gate")
    return gate.passed


def triangle_area(p0, p1, p2, form: HermitianForm | None = None, method: AreaMethod | str = "auto") -> float:
    """Signed symplectic area of the geodesic cone from p0 over [p1, p2]."""
    method = AreaMethod(method)
    P = [_as_vector(p) for p in (p0, p1, p2)]
    gram = _gram_for(P[0], form)
    if _degenerate(P[0], P[1], P[2], gram):
        return 0.0
    if _closed_enabled(method):
        return float(AREA_CONSTANT * cartan_argument(*P, gram))
    return triangle_area_quadrature(*P, form=form)


def triangle_areas(P0: np.ndarray, P1: np.ndarray, P2: np.ndarray, gram: np.ndarray,
                   method: AreaMethod | str = "auto") -> np.ndarray:
    method = AreaMethod(method)
    if _closed_enabled(method):
        return AREA_CONSTANT * cartan_argument(P0, P1, P2, gram)
    out = np.empty(len(P0))
    for k in range(0, len(P0), 256):
        sl = slice(k, k + 256)
        out[sl] = _quadrature_batch(P0[sl], P1[sl], P2[sl], gram, 16)
    return out


# ---------------------------------------------------------------- interior integral


def reverse_orientation(mesh: Mesh) -> Mesh:
    """The same mesh with every triangle (and boundary edge) traversed the other way."""
    tris = np.asarray(mesh.triangles)[:, ::-1].copy()
    boundary = [[(v, u, c) for (u, v, c) in edges] for edges in mesh.boundary_edges]
    return dataclasses.replace(mesh, triangles=tris, boundary_edges=boundary, triangle_area=-np.asarray(mesh.triangle_area))


def _image_triangles(fmap: EquivariantMap) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    imgs = fmap.vertex_images()
    T = np.asarray(fmap.mesh.triangles)
    return imgs[T[:, 0]], imgs[T[:, 1]], imgs[T[:, 2]]


def pullback_triangle_areas(fmap: EquivariantMap, method: AreaMethod | str = "auto") -> np.ndarray:
    P0, P1, P2 = _image_triangles(fmap)
    return triangle_areas(P0, P1, P2, fmap.gram, method)


def pullback_integral(fmap: EquivariantMap, method: AreaMethod | str = "auto") -> float:
    """Sum of image-triangle areas over the fundamental domain."""
    return math.fsum(pullback_triangle_areas(fmap, method).tolist())


# ---------------------------------------------------------------- second route: pointwise pairing


def _disk_lifts(z: np.ndarray) -> np.ndarray:
    X = np.stack([z, np.ones_like(z)], axis=-1).astype(complex)
    return hyperboloid(X, HermitianForm.ball(1).gram)


def _log_coordinates(X: np.ndarray, Y: np.ndarray, gram: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Real coordinates (Re, Im interleaved) of log_X(Y) in a metric-orthonormal frame."""
    V, _ = log_map(X, Y, gram)
    sgn = _sgn(gram)
    c = 2.0 * np.einsum("ti,tia,i->ta", V, np.conj(basis), sgn)
    out = np.empty(c.shape[:-1] + (2 * c.shape[-1],))
    out[..., 0::2] = c.real
    out[..., 1::2] = c.imag
    return out


def triangle_differentials(fmap: EquivariantMap) -> np.ndarray:
    """Real differentials D (shape (T, 3, 2n, 2)) at the three corners of each triangle."""
    mesh = fmap.mesh
    T = np.asarray(mesh.triangles)
    src = _disk_lifts(mesh.positions)
    imgs = fmap.vertex_images()
    gs = HermitianForm.ball(1).gram
    gt = fmap.gram
    out = []
    for k in range(3):
        a, b, c = T[:, k], T[:, (k + 1) % 3], T[:, (k + 2) % 3]
        bs = _tangent_basis(src[a], _sgn(gs))
        bt = _tangent_basis(imgs[a], _sgn(gt))
        U = np.stack([_log_coordinates(src[a], src[b], gs, bs), _log_coordinates(src[a], src[c], gs, bs)], axis=-1)
        V = np.stack([_log_coordinates(imgs[a], imgs[b], gt, bt), _log_coordinates(imgs[a], imgs[c], gt, bt)], axis=-1)
        out.append(V @ np.linalg.inv(U))
    return np.stack(out, axis=1)


def batched_pairing(D: np.ndarray) -> np.ndarray:
    """2(e' - e'') for a stack of real differentials from a surface (m = 1)."""
    D = np.asarray(D, dtype=float)
    n = D.shape[-2] // 2
    src = unitary_frame(1)[0] / np.sqrt(2.0)
    Zt = unitary_frame(n)
    dfz = D @ src
    dfzb = D @ np.conj(src)
    f = dfz @ Zt.conj().T
    fbar = dfzb @ Zt.conj().T
    ep = 2.0 * np.sum(np.abs(f) ** 2, axis=-1)
    epp = 2.0 * np.sum(np.abs(fbar) ** 2, axis=-1)
    return 2.0 * (ep - epp)


def jet_pairing(D: np.ndarray) -> float:
    """The same pairing for one differential, through MapJet."""
    D = np.asarray(D, dtype=float)
    return omega_pairing(MapJet.from_real_differential(D, 1, D.shape[0] // 2))


def pairing_integral(fmap: EquivariantMap) -> float:
    """Half the integral of <f*omega, omega> dV, per triangle averaged over its corners."""
    D = triangle_differentials(fmap)
    pair = batched_pairing(D).mean(axis=1)
    return math.fsum((0.5 * pair * np.asarray(fmap.mesh.triangle_area)).tolist())


# ---------------------------------------------------------------- boundary correction


def _geodesic_with_velocity(A: np.ndarray, B: np.ndarray, s: np.ndarray, gram: np.ndarray):
    A = hyperboloid(A, gram)
    B = align(A, hyperboloid(B, gram), gram)
    rho = np.arccosh(np.maximum(-hform(A, B, gram).real, 1.0))
    small = rho < 1e-14
    r = np.where(small, 1.0, rho)
    sh = np.sinh(r)
    a = np.where(small[:, None], 1.0 - s, np.sinh((1.0 - s) * r[:, None]) / sh[:, None])
    b = np.where(small[:, None], s, np.sinh(s * r[:, None]) / sh[:, None])
    da = np.where(small[:, None], -1.0, -r[:, None] * np.cosh((1.0 - s) * r[:, None]) / sh[:, None])
    db = np.where(small[:, None], 1.0, r[:, None] * np.cosh(s * r[:, None]) / sh[:, None])
    X = a[..., None] * A[:, None, :] + b[..., None] * B[:, None, :]
    dX = da[..., None] * A[:, None, :] + db[..., None] * B[:, None, :]
    return X, dX


def varsigma_line_integrals(pot: KahlerPotential, A: np.ndarray, B: np.ndarray,
                            order: int = 8, pieces: int = 2) -> np.ndarray:
    """Integral of varsigma along the geodesic A -> B, per row, by composite Gauss rules."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    x, w = np.polynomial.legendre.leggauss(order)
    nodes = np.concatenate([(k + 0.5 * (x + 1.0)) / pieces for k in range(pieces)])
    wts = np.tile(0.5 * w / pieces, pieces)
    gram = pot.form.gram
    s = np.broadcast_to(nodes, (len(A), len(nodes)))
    X, dX = _geodesic_with_velocity(A, B, s, gram)
    vals = varsigma_lifts(pot, X.reshape(-1, X.shape[-1]), dX.reshape(-1, X.shape[-1])).reshape(len(A), -1)
    return vals @ wts


@dataclass
class CuspCorrection:
    cusp: int
    kind: str
    value: float
    endpoint_gap: float | None = None
    edges: int = 0

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def _null_anchor(v: np.ndarray, form: HermitianForm) -> ProjectiveLift:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    g = form.gram
    # push the classifier's eigenvector onto the null cone
    for _ in range(3):
        q = hform(v, v, g).real
        if abs(q) < 1e-14:
            break
        e = np.zeros_like(v)
        e[-1] = 1.0
        t = -q / (2.0 * hform(v, e, g).real) if abs(hform(v, e, g).real) > 1e-12 else 0.0
        v = v + t * e
    return ProjectiveLift(v, form)


def _cusp_potentials(rep: SurfaceRep) -> list[tuple[str, list[KahlerPotential]]]:
    form = rep.form
    out = []
    for i, cls in enumerate(rep.peripheral_classes()):
        if cls.type is IsometryType.ELLIPTIC:
            pots = [KahlerPotential(PotentialKind.ELLIPTIC, ProjectiveLift(cls.fixed_points[0], form))]
        elif cls.type is IsometryType.PARABOLIC:
            pots = [KahlerPotential(PotentialKind.PARABOLIC, _null_anchor(cls.fixed_points[0], form))]
        elif cls.type is IsometryType.HYPERBOLIC:
            pots = [
                KahlerPotential(PotentialKind.PARABOLIC, _null_anchor(cls.attracting, form)),
                KahlerPotential(PotentialKind.PARABOLIC, _null_anchor(cls.repelling, form)),
            ]
        else:
            raise TauError(f"cusp {i}: peripheral image has no usable classification")
        out.append((cls.type.value, pots))
    return out


def boundary_correction(fmap: EquivariantMap, rep: SurfaceRep | None = None) -> list[CuspCorrection]:
    """Per-cusp horocycle integrals of f*varsigma_i over the truncation boundary."""
    rep = rep or fmap.rep
    mesh = fmap.mesh
    imgs = fmap.vertex_images()
    ctx = fmap.context
    out = []
    for i, (kind, pots) in enumerate(_cusp_potentials(rep)):
        edges = mesh.boundary_edges[i] if i < len(mesh.boundary_edges) else []
        if not edges:
            out.append(CuspCorrection(i, kind, 0.0, 0.0 if len(pots) > 1 else None, 0))
            continue
        E = np.array(edges, dtype=int)
        cusp = mesh.model.cusps[i]
        mats = [ctx.eval_word(eta) for _, eta in cusp.corners]
        A = np.empty((len(E), imgs.shape[1]), dtype=complex)
        B = np.empty_like(A)
        for j, M in enumerate(mats):
            sel = E[:, 2] == j
            A[sel] = imgs[E[sel, 0]] @ M.T
            B[sel] = imgs[E[sel, 1]] @ M.T
        vals = [math.fsum(varsigma_line_integrals(p, A, B).tolist()) for p in pots]
        gap = abs(vals[0] - vals[1]) if len(vals) > 1 else None
        out.append(CuspCorrection(i, kind, vals[0], gap, len(E)))
    return out


# ---------------------------------------------------------------- tau


class Classification(str, enum.Enum):
    INTERIOR = "Interior"
    NEAR_MAXIMAL = "NearMaximal"
    MAXIMAL_CONSISTENT = "Maximal-consistent"


@dataclass
class TauReport:
    tau: float
    bound: float
    ratio: float
    truncation: float
    tau_s: float
    tau_s_plus_1: float | None
    interior: float
    per_cusp: list[CuspCorrection]
    classification: Classification
    flags: list[str] = field(default_factory=list)
    conjugation_gap: float | None = None
    tau_pairing: float | None = None
    pairing_gap: float | None = None
    rigidity: "RigidityReport | None" = None
    solver: dict | None = None

    @property
    def truncation_delta(self) -> float | None:
        if self.tau_s_plus_1 is None:
            return None
        return abs(self.tau_s - self.tau_s_plus_1)

    def to_json(self) -> dict:
        return {
            "tau": self.tau,
            "bound": self.bound,
            "ratio": self.ratio,
            "classification": self.classification.value,
            "interior": self.interior,
            "per_cusp": [c.to_json() for c in self.per_cusp],
            "flags": list(self.flags),
            "truncation": {"s": self.truncation, "tau_s": self.tau_s, "tau_s_plus_1": self.tau_s_plus_1,
                           "delta": self.truncation_delta},
            "conjugation_gap": self.conjugation_gap,
            "tau_pairing": self.tau_pairing,
            "pairing_gap": self.pairing_gap,
            "rigidity": None if self.rigidity is None else self.rigidity.to_json(),
            "solver": self.solver,
        }


def _tau_value(fmap: EquivariantMap, method: AreaMethod | str = "auto") -> tuple[float, float, list[CuspCorrection]]:
    interior = pullback_integral(fmap, method)
    per = boundary_correction(fmap)
    return interior - math.fsum(c.value for c in per), interior, per


def _classify(ratio: float) -> Classification:
    return Classification.NEAR_MAXIMAL if ratio > NEAR_MAXIMAL else Classification.INTERIOR


def conjugated_map(fmap: EquivariantMap, g: np.ndarray) -> EquivariantMap:
    """g . f, equivariant for the conjugated representation g rho g^-1."""
    rep = fmap.rep.conjugated(g)
    return EquivariantMap(fmap.mesh, rep, fmap.images @ np.asarray(g).T, seed=fmap.seed)


def tau(rep: SurfaceRep, fmap: EquivariantMap | None = None, *, resolution: float = 0.25,
        truncation: float | None = None, check_truncation: bool = True, check_conjugation: bool = True,
        second_path: bool = True, seed: int = 0, method: AreaMethod | str = "auto") -> TauReport:
    """tau = interior symplectic area minus the cusp horocycle corrections."""
    topo = rep.topology
    bound = topo.bound
    s = truncation if truncation is not None else (fmap.mesh.truncation if fmap is not None else 3.0)
    if rep.common_boundary_fixed_point() is not None:
        return TauReport(0.0, bound, 0.0, s, 0.0, 0.0, 0.0, [], Classification.INTERIOR, ["non-reductive"])
    flags: list[str] = []
    if fmap is None:
        fmap = model_map(rep, build_mesh(rep.model, resolution, s))
        flags.append("model-map")
    mesh = fmap.mesh
    value, interior, per = _tau_value(fmap, method)
    for c in per:
        if c.endpoint_gap is not None and c.endpoint_gap > ENDPOINT_TOL:
            flags.append(f"endpoint-dependent-correction:{c.cusp}")
    tau_next = None
    if check_truncation and topo.punctures > 0:
        nxt = model_map(rep, build_mesh(rep.model, mesh.resolution, mesh.truncation + 1.0))
        tau_next = _tau_value(nxt, method)[0]
        if abs(tau_next - value) > TRUNCATION_TOL * bound:
            flags.append("truncation-unstable")
    conj_gap = None
    if check_conjugation:
        g = random_su_n1(rep.n, np.random.default_rng(seed), scale=0.5)
        conj_gap = abs(_tau_value(conjugated_map(fmap, g), method)[0] - value)
        if conj_gap > CONJUGATION_TOL:
            flags.append("conjugation-variant")
    tau_pair = gap = None
    if second_path:
        tau_pair = pairing_integral(fmap) - math.fsum(c.value for c in per)
        gap = abs(tau_pair - value)
        if gap > PAIRING_TOL * bound:
            flags.append("pairing-route-disagrees")
    ratio = abs(value) / bound
    return TauReport(value, bound, ratio, mesh.truncation, value, tau_next, interior, per, _classify(ratio),
                     flags, conj_gap, tau_pair, gap)


# ---------------------------------------------------------------- rigidity diagnostics


@dataclass
class RigidityReport:
    triangles: int
    degenerate: int
    rank0: bool
    lambda_max: float | None
    schwarz_pick_ok: bool | None
    proxy_min: float | None
    proxy_max: float | None
    proxy_mean_abs: float | None
    proxy_in_range: bool | None
    curvature_mean: float | None
    curvature_max: float | None
    curvature_min: float | None
    curvature_vertices: int
    curvature_ok: bool | None
    isometry: bool
    verdict: str

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def _euclid_angles(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Angles opposite a, b, c of flat triangles with these side lengths."""
    def ang(x, y, z):
        cos = (y * y + z * z - x * x) / np.maximum(2 * y * z, 1e-300)
        return np.arccos(np.clip(cos, -1.0, 1.0))
    return np.stack([ang(a, b, c), ang(b, c, a), ang(c, a, b)], axis=-1)


def _flat_area(a, b, c):
    s = 0.5 * (a + b + c)
    return np.sqrt(np.maximum(s * (s - a) * (s - b) * (s - c), 0.0))


def _edge_gram(l01, l02, l12):
    """Flat metric on a triangle (edge vectors e1 = p1 - p0, e2 = p2 - p0) from squared lengths."""
    g11 = l01 ** 2
    g22 = l02 ** 2
    g12 = 0.5 * (g11 + g22 - l12 ** 2)
    return np.stack([np.stack([g11, g12], -1), np.stack([g12, g22], -1)], -2)


SCHWARZ_PICK_TOL = 0.02
CURVATURE_TOL = 0.05
ISOMETRY_TOL = 0.05
RANK0_SCALE = 1e-9


def rigidity_diagnostics(fmap: EquivariantMap) -> RigidityReport:
    """Schwarz-Pick ratio, area proxy, pullback curvature, and the isometry verdict."""
    mesh = fmap.mesh
    T = np.asarray(mesh.triangles)
    pos = mesh.positions
    src = _disk_lifts(pos)
    imgs = fmap.vertex_images()
    gs, gt = HermitianForm.ball(1).gram, fmap.gram

    def lengths(P, i, j, g):
        return distance_lifts(P[T[:, i]], P[T[:, j]], g)

    s01, s02, s12 = lengths(src, 0, 1, gs), lengths(src, 0, 2, gs), lengths(src, 1, 2, gs)
    t01, t02, t12 = lengths(imgs, 0, 1, gt), lengths(imgs, 0, 2, gt), lengths(imgs, 1, 2, gt)
    n_tri = len(T)
    scale = float(np.max(np.concatenate([t01, t02, t12]))) if n_tri else 0.0
    if scale < RANK0_SCALE:
        return RigidityReport(n_tri, n_tri, True, 0.0, True, 0.0, 0.0, 0.0, True, None, None, None, 0, None,
                              False, "rank-0")
    # (1) Schwarz-Pick: eigenvalues of the pullback metric relative to the source metric
    S = _edge_gram(s01, s02, s12)
    G = _edge_gram(t01, t02, t12)
    ev = np.linalg.eigvals(np.linalg.solve(S, G)).real
    src_area = np.asarray(mesh.triangle_area)
    img_area = pullback_triangle_areas(fmap)
    lam_max = float(np.sqrt(np.max(ev)))
    # (2) pointwise pairing proxy
    proxy = 2.0 * img_area / src_area
    # (3) angle-defect curvature of the pullback metric, over orbit stars
    flat = _flat_area(t12, t02, t01)
    degenerate = flat < 1e-10 * np.maximum(src_area, 1e-300)
    angles = _euclid_angles(t12, t02, t01)
    O = mesh.n_orbits
    ang_sum = np.zeros(O)
    area_sum = np.zeros(O)
    bad = np.zeros(O, dtype=bool)
    for k in range(3):
        orb = mesh.orbit[T[:, k]]
        np.add.at(ang_sum, orb, angles[:, k])
        np.add.at(area_sum, orb, flat / 3.0)
        np.add.at(bad, orb, degenerate)
    pinned = np.zeros(O, dtype=bool)
    pinned[mesh.orbit[np.asarray(mesh.pinned, dtype=int)]] = True
    if len(mesh.pinned):
        # stars touching the truncation boundary are incomplete
        touch = np.zeros(O, dtype=bool)
        on_pinned = pinned[mesh.orbit[T]].any(axis=1)
        for k in range(3):
            touch[mesh.orbit[T[on_pinned, k]]] = True
        bad |= touch
    ok = ~bad & (area_sum > 0)
    K = (2 * math.pi - ang_sum[ok]) / area_sum[ok]
    good = ~degenerate
    pmin = float(np.min(proxy[good])) if good.any() else None
    pmax = float(np.max(proxy[good])) if good.any() else None
    wmean = float(np.sum(np.abs(proxy[good]) * src_area[good]) / np.sum(src_area[good])) if good.any() else None
    curv_ok = bool(K.size and np.max(K) <= -1.0 + CURVATURE_TOL) if K.size else None
    isometry = bool(
        good.all()
        and abs(lam_max - 1.0) <= ISOMETRY_TOL
        and np.all(np.abs(np.abs(proxy) - 2.0) <= 2.0 * ISOMETRY_TOL)
    )
    if isometry:
        verdict = "isometry"
    elif wmean is not None and wmean > 2.0 * (1.0 - ISOMETRY_TOL):
        verdict = "near-isometry"
    else:
        verdict = "non-isometric"
    return RigidityReport(
        triangles=n_tri,
        degenerate=int(degenerate.sum()),
        rank0=False,
        lambda_max=lam_max,
        schwarz_pick_ok=bool(lam_max <= 1.0 + SCHWARZ_PICK_TOL),
        proxy_min=pmin,
        proxy_max=pmax,
        proxy_mean_abs=wmean,
        proxy_in_range=bool(pmin is not None and pmin >= -2.0 - 2 * TOL_REPORT and pmax <= 2.0 + 2 * TOL_REPORT),
        curvature_mean=float(np.mean(K)) if K.size else None,
        curvature_max=float(np.max(K)) if K.size else None,
        curvature_min=float(np.min(K)) if K.size else None,
        curvature_vertices=int(K.size),
        curvature_ok=curv_ok,
        isometry=isometry,
        verdict=verdict,
    )


# ---------------------------------------------------------------- Milnor-Wood


def milnor_wood_report(rep: SurfaceRep, *, resolution: float = 0.25, truncation: float = 3.0,
                       solve: bool = True, cfg: SolverConfig | None = None, tol_report: float = TOL_REPORT,
                       check_truncation: bool = True, check_conjugation: bool = True, seed: int = 0,
                       fmap: EquivariantMap | None = None) -> TauReport:
    """Solve (when possible), compute tau, and compare with the Milnor-Wood bound."""
    if rep.common_boundary_fixed_point() is not None:
        report = tau(rep, resolution=resolution, truncation=truncation)
        return report
    if fmap is None:
        fmap = model_map(rep, build_mesh(rep.model, resolution, truncation))
    solver_info = None
    flags: list[str] = []
    if solve:
        try:
            solved, sr = minimize(fmap, cfg or SolverConfig())
            fmap = solved
            solver_info = sr.to_json()
            if not sr.converged:
                flags.append("solver-no-convergence")
        except BoundaryDriftError:
            flags.append("boundary-drift")
        except SolverError as exc:
            flags.append(f"solver-error:{exc}")
    else:
        flags.append("model-map")
    report = tau(rep, fmap, check_truncation=check_truncation, check_conjugation=check_conjugation, seed=seed)
    report.flags = flags + report.flags
    report.solver = solver_info
    if report.ratio > 1.0 + tol_report:
        raise MilnorWoodViolation(f"|tau|/bound = {report.ratio:.6f} exceeds 1 + {tol_report}")
    if report.classification is Classification.NEAR_MAXIMAL:
        report.rigidity = rigidity_diagnostics(fmap)
        if report.rigidity.verdict in ("isometry", "near-isometry"):
            report.classification = Classification.MAXIMAL_CONSISTENT
    return report
