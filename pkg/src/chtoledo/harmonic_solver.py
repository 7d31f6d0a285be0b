"""Equivariant maps from a surface mesh into complex hyperbolic space, and their energy.

Images are stored once per vertex orbit as Ball-form lifts on the hyperboloid <X, X> = -1.
A vertex copy ``v`` whose orbit representative is ``r`` carries the word gamma_v with
x_v = gamma_v x_r, and its image is rho(gamma_v) F[orbit(v)]. Equivariance across paired
sides therefore holds by construction, and it is re-checked on every matched pair.

Distances follow cosh(d/2) = |<X, Y>| for hyperboloid lifts. The Riemannian metric on X^perp
is therefore 4 <., .>, and a tangent vector V has length 2 |V|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy import integrate
from scipy.linalg import expm, logm

from .chs_models import align, distance_lifts, geodesic_lifts, hyperboloid
from .hermitian_core import (
    HermitianError,
    HermitianForm,
    cayley_matrix,
    embed_block,
    hform,
    normalize_max_entry,
)
from .isometry_toolkit import IsometryClass, IsometryType
from .mesh import BAND, CENTER, CONE, POLYGON_VERTEX, STRIP, Mesh
from .surface_groups import SurfaceRep, word_eval

DRIFT_EPS = 1e-6
TRUST_RADIUS = 0.5


class SolverError(HermitianError):
    pass


class BoundaryDriftError(SolverError):
    def __init__(self, message: str, orbit: int):
        super().__init__(message)
        self.orbit = orbit


@dataclass
class SolverConfig:
    tol: float = 1e-8
    max_sweeps: int = 10_000
    colorize: bool = True
    inner_tol: float = 1e-10
    inner_max: int = 64
    drift_eps: float = DRIFT_EPS
    check_equivariance: bool = True
    equivariance_tol: float = 1e-9
    accelerate: bool = True
    sweeps_per_newton: int = 10


# ---------------------------------------------------------------- hyperboloid primitives


def _g(n: int) -> np.ndarray:
    return HermitianForm.ball(n).gram


def _bform(v: np.ndarray, w: np.ndarray, sgn: np.ndarray) -> np.ndarray:
    """Ball form w^* G v for diagonal G = diag(sgn)."""
    return (v * np.conj(w)) @ sgn


def _sgn(gram: np.ndarray) -> np.ndarray:
    return np.real(np.diag(gram))


def log_map(X: np.ndarray, Y: np.ndarray, gram: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal tangent V at X pointing to Y, with <V, V>^(1/2) = d(X, Y) / 2. Also returns rho."""
    sgn = _sgn(gram)
    ip = _bform(X, Y, sgn)
    ab = np.abs(ip)
    ph = np.where(ab > 0, -ip / np.where(ab > 0, ab, 1.0), 1.0)
    Ya = Y * ph[..., None]
    c = np.maximum(ab, 1.0)
    V = Ya - c[..., None] * X
    # <V, V> = sinh^2(rho); arcsinh keeps full precision at small distances
    s = np.sqrt(np.maximum(_bform(V, V, sgn).real, 0.0))
    rho = np.arcsinh(s)
    scale = np.where(s > 1e-300, rho / np.where(s > 1e-300, s, 1.0), 1.0)
    return V * scale[..., None], rho


def exp_map(X: np.ndarray, V: np.ndarray, gram: np.ndarray) -> np.ndarray:
    sgn = _sgn(gram)
    r = np.sqrt(np.maximum(_bform(V, V, sgn).real, 0.0))
    small = r < 1e-300
    safe = np.where(small, 1.0, r)
    out = np.cosh(r)[..., None] * X + (np.sinh(safe) / safe)[..., None] * V
    nrm = np.sqrt(np.maximum(-_bform(out, out, sgn).real, 1e-300))
    return out / nrm[..., None]


def _phase_fix(X: np.ndarray) -> np.ndarray:
    """Make the last coordinate real positive (lifts are projective)."""
    last = X[..., -1]
    ph = np.where(np.abs(last) > 0, np.conj(last) / np.where(np.abs(last) > 0, np.abs(last), 1.0), 1.0)
    return X * ph[..., None]


# ---------------------------------------------------------------- map context


class MapContext:
    """Group matrices attached to mesh copies and edge orbits, for one representation."""

    def __init__(self, mesh: Mesh, rep: SurfaceRep):
        if rep.model is not mesh.model and len(rep.generators) != len(mesh.model.generators):
            raise SolverError("representation and mesh use different surface models")
        self.mesh = mesh
        self.rep = rep
        self.n = rep.n
        self.gram = _g(rep.n)
        gens, invs = rep.generators, rep.inverses
        cache: dict[tuple[int, ...], np.ndarray] = {}

        def ev(w):
            if w not in cache:
                cache[w] = word_eval(w, gens, invs)
            return cache[w]

        self.copy_mats = np.array([ev(w) for w in mesh.words])
        self._ev = ev
        f = rep.form
        inv = np.array([np.linalg.inv(m) for m in self.copy_mats])
        del f
        self.copy_inv = inv
        u, v = mesh.edges[:, 0], mesh.edges[:, 1]
        self.edge_u = mesh.orbit[u]
        self.edge_v = mesh.orbit[v]
        # neighbor image seen from u's orbit frame: T_uv F[o_v]
        self.T_uv = inv[u] @ self.copy_mats[v]
        self.T_vu = inv[v] @ self.copy_mats[u]
        self.weights = mesh.edge_weights.copy()

    def eval_word(self, w) -> np.ndarray:
        return self._ev(tuple(w))


@dataclass
class EquivariantMap:
    mesh: Mesh
    rep: SurfaceRep
    images: np.ndarray
    context: MapContext | None = field(default=None, repr=False)
    seed: str = "model"

    def __post_init__(self) -> None:
        if self.context is None:
            self.context = MapContext(self.mesh, self.rep)
        self.images = _phase_fix(hyperboloid(np.asarray(self.images, dtype=complex), self.context.gram))

    @property
    def gram(self) -> np.ndarray:
        return self.context.gram

    def copy(self) -> "EquivariantMap":
        return EquivariantMap(self.mesh, self.rep, self.images.copy(), self.context, self.seed)

    def vertex_images(self) -> np.ndarray:
        """Images of every mesh vertex copy."""
        F = self.images[self.mesh.orbit]
        return np.einsum("vij,vj->vi", self.context.copy_mats, F)

    def equivariance_residual(self) -> float:
        """Max projective mismatch between rho(h) f(x) and f(h x) over all matched pairs."""
        mesh = self.mesh
        imgs = self.vertex_images()
        g = self.gram
        worst = 0.0
        model = mesh.model
        pos = mesh.positions
        from .mesh import _nearest
        from scipy.spatial import cKDTree
        from .surface_groups import mobius, su11_inverse

        tree = cKDTree(np.column_stack([pos.real, pos.imag]))
        for j, gm in enumerate(model.generators):
            for letter, h in ((j + 1, gm), (-(j + 1), su11_inverse(gm))):
                m = _nearest(tree, pos, mobius(h, pos))
                src = np.nonzero(m >= 0)[0]
                if len(src) == 0:
                    continue
                H = self.context.eval_word((letter,))
                a = imgs[src] @ H.T
                b = imgs[m[src]]
                worst = max(worst, float(_projective_gap(a, b, g).max()))
        return worst


def _projective_gap(a: np.ndarray, b: np.ndarray, gram: np.ndarray) -> np.ndarray:
    a = hyperboloid(a, gram)
    b = align(a, hyperboloid(b, gram), gram)
    scale = np.maximum(np.abs(a).max(axis=-1), 1.0)
    return np.abs(a - b).max(axis=-1) / scale


# ---------------------------------------------------------------- cusp model maps


@dataclass
class CuspModel:
    """Model map Phi on one cusp, in the cusp's unfolded frame coordinates (v, t)."""

    kind: IsometryType
    cls: IsometryClass
    length: float
    base: np.ndarray
    frame: np.ndarray | None = None
    generator: np.ndarray | None = None
    base_t: float = 0.0

    def __call__(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n1 = self.base.shape[0]
        if self.kind is IsometryType.ELLIPTIC:
            return np.broadcast_to(self.base, (len(v), n1)).copy()
        if self.kind is IsometryType.HYPERBOLIC:
            ell = self.cls.length
            return np.array([self.cls.axis_point(float(x) / self.length * ell) for x in v])
        # parabolic: Heisenberg path on the horosphere through the base point, height doubled
        out = np.empty((len(v), n1), dtype=complex)
        K, Ki = self.frame, np.linalg.inv(self.frame)
        for k, (x, tt) in enumerate(zip(v, t)):
            P = expm((x / self.length) * self.generator) @ self.base
            S = Ki @ P
            S = S / S[-1]
            w = -S[0]
            z = S[1:-1]
            vv = -2.0 * w.imag
            h = 2.0 * w.real - float(np.vdot(z, z).real)
            tt_path = math.log(h)
            new_t = tt_path + 2.0 * tt
            w_new = 0.5 * (math.exp(new_t) - 1j * vv + float(np.vdot(z, z).real))
            S2 = np.concatenate([[-w_new], z, [1.0]])
            out[k] = K @ S2
        return out


def _siegel_frame(xi: np.ndarray, p0: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """K with K^* G_ball K = G_siegel, K e_0 proportional to xi and p0 on the Siegel axis (z = 0)."""
    n1 = len(xi)
    a = hform(p0, p0, gram).real
    b = hform(xi, p0, gram)
    eta = p0 + (-a / (2.0 * b)) * xi
    eta = eta / np.conj(hform(xi, eta, gram))
    cols = [xi, eta]
    # orthonormal complement
    basis = []
    for e in np.eye(n1, dtype=complex):
        w = e.copy()
        # project off span(xi, eta) using the form: w - <w, eta> xi - <w, xi> eta
        w = w - hform(w, eta, gram) * xi - hform(w, xi, gram) * eta
        for q in basis:
            w = w - hform(w, q, gram) * q
        nrm = hform(w, w, gram).real
        if nrm > 1e-8:
            basis.append(w / math.sqrt(nrm))
        if len(basis) == n1 - 2:
            break
    K = np.column_stack([cols[0]] + basis + [cols[1]])
    return K


def _parabolic_log(mat: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Logarithm of the projective parabolic: rescale so the fixed null vector has eigenvalue 1."""
    lam = np.vdot(xi, mat @ xi) / np.vdot(xi, xi)
    c = mat / lam
    X = logm(c)
    if np.abs(expm(X) - c).max() > 1e-8 * max(1.0, np.abs(c).max()):
        raise SolverError("could not take a logarithm of the parabolic peripheral")
    return X


def cusp_models(rep: SurfaceRep, base: np.ndarray | None = None) -> list[CuspModel]:
    n = rep.n
    gram = _g(n)
    if base is None:
        base = np.zeros(n + 1, dtype=complex)
        base[n] = 1.0
    out = []
    for cusp, cls in zip(rep.model.cusps, rep.peripheral_classes()):
        L = cusp.length
        if cls.type is IsometryType.ELLIPTIC:
            p = hyperboloid(cls.fixed_points[0], gram)
            out.append(CuspModel(cls.type, cls, L, p))
        elif cls.type is IsometryType.HYPERBOLIC:
            out.append(CuspModel(cls.type, cls, L, hyperboloid(cls.axis_point(0.0), gram)))
        else:
            xi = cls.fixed_points[0]
            K = _siegel_frame(xi, base, gram)
            X = _parabolic_log(cls.matrix, xi)
            out.append(CuspModel(cls.type, cls, L, hyperboloid(base, gram), K, X))
    return out


def model_map(rep: SurfaceRep, mesh: Mesh, base: np.ndarray | None = None, seed: str = "model") -> EquivariantMap:
    """Seed map: cusp model maps on the strips, geodesic coning and banding elsewhere.

    ``seed='source'`` instead embeds the mesh positions directly. This is only valid
    when the representation is the embedded uniformization.
    """
    n = rep.n
    gram = _g(n)
    ctx = MapContext(mesh, rep)
    if base is None:
        base = np.zeros(n + 1, dtype=complex)
        base[n] = 1.0
    base = hyperboloid(np.asarray(base, dtype=complex), gram)
    O = mesh.n_orbits
    if seed == "source":
        target = [embed_block(g, n) for g in mesh.model.generators]
        err = max(
            min(np.abs(a - b).max(), np.abs(a + b).max()) for a, b in zip(target, rep.generators)
        )
        if err > 1e-8:
            raise SolverError("source seed needs the embedded uniformizing representation")
        z = mesh.positions[mesh.orbit_rep]
        X = np.zeros((O, n + 1), dtype=complex)
        X[:, 0] = z
        X[:, n] = 1.0
        return EquivariantMap(mesh, rep, X, ctx, "source")
    images = np.full((O, n + 1), np.nan + 0j)
    models = cusp_models(rep, base)
    cuspmats = [
        [ctx.eval_word(eta) for _, eta in cusp.corners] for cusp in mesh.model.cusps
    ]
    cusp_inv = [[np.linalg.inv(m) for m in row] for row in cuspmats]

    def copy_image(v: int) -> np.ndarray:
        o = mesh.orbit[v]
        if np.isnan(images[o, 0].real):
            raise SolverError("seed order violated: anchor image not ready")
        return ctx.copy_mats[v] @ images[o]

    order = sorted(range(O), key=lambda o: mesh.recipes[mesh.orbit_rep[o]].kind)
    strip_batch: dict[tuple[int, int], list[int]] = {}
    for o in order:
        r = mesh.recipes[mesh.orbit_rep[o]]
        if r.kind == STRIP:
            strip_batch.setdefault((r.cusp, r.corner), []).append(o)
    for (i, j), orbs in strip_batch.items():
        vs = np.array([mesh.recipes[mesh.orbit_rep[o]].params[0] for o in orbs])
        ts = np.array([mesh.recipes[mesh.orbit_rep[o]].params[1] for o in orbs])
        Phi = models[i](vs, ts)
        # unfolded frame -> corner j: f(x) = rho(eta_j)^{-1} Phi; then to the orbit frame
        for o, P in zip(orbs, Phi):
            v = mesh.orbit_rep[o]
            images[o] = ctx.copy_inv[v] @ (cusp_inv[i][j] @ P)
    for o in order:
        v = mesh.orbit_rep[o]
        r = mesh.recipes[v]
        if r.kind in (CENTER, POLYGON_VERTEX):
            images[o] = ctx.copy_inv[v] @ base
        elif r.kind == CONE:
            c0, a, b = r.anchors
            rr, u = r.params
            top = geodesic_lifts(copy_image(a), copy_image(b), u, gram)
            P = geodesic_lifts(copy_image(c0), top, rr, gram)
            images[o] = ctx.copy_inv[v] @ P
        elif r.kind == BAND:
            a, b = r.anchors
            P = geodesic_lifts(copy_image(a), copy_image(b), r.params[0], gram)
            images[o] = ctx.copy_inv[v] @ P
    if np.isnan(images.real).any():
        raise SolverError("model map left some orbits unset")
    return EquivariantMap(mesh, rep, images, ctx, seed)


def model_strip_images(fmap: EquivariantMap) -> EquivariantMap:
    """The map that agrees with the cusp model on strips (used for alpha profiles)."""
    return model_map(fmap.rep, fmap.mesh)


# ---------------------------------------------------------------- energy


def edge_lengths(fmap: EquivariantMap) -> np.ndarray:
    ctx = fmap.context
    X = fmap.images[ctx.edge_u]
    Y = np.einsum("eij,ej->ei", ctx.T_uv, fmap.images[ctx.edge_v])
    return distance_lifts(X, Y, ctx.gram)


def discrete_energy(fmap: EquivariantMap) -> float:
    """1/2 sum over edge orbits of w_e d^2, summed in index order."""
    d = edge_lengths(fmap)
    return float(0.5 * math.fsum((fmap.context.weights * d * d).tolist()))


def triangle_energies(fmap: EquivariantMap) -> np.ndarray:
    """Per-triangle share of the energy, from each triangle's own cotangent halves."""
    from .mesh import disk_distances, triangle_angles

    mesh = fmap.mesh
    z = mesh.positions[mesh.triangles]
    ang = triangle_angles(
        disk_distances(z[:, 1], z[:, 2]), disk_distances(z[:, 2], z[:, 0]), disk_distances(z[:, 0], z[:, 1])
    )
    cot = 0.5 / np.tan(np.clip(ang, 1e-12, np.pi - 1e-12))
    imgs = fmap.vertex_images()
    T = mesh.triangles
    g = fmap.gram
    out = np.zeros(len(T))
    for k, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        d = distance_lifts(imgs[T[:, a]], imgs[T[:, b]], g)
        out += 0.5 * cot[:, k] * d * d
    return out


def geodesic_homotopy(f0: EquivariantMap, f1: EquivariantMap, s: float) -> EquivariantMap:
    """Pointwise geodesic interpolation; equivariant because rho acts by isometries."""
    P = geodesic_lifts(f0.images, f1.images, s, f0.gram)
    return EquivariantMap(f0.mesh, f0.rep, P, f0.context, f0.seed)


def contract_toward(fmap: EquivariantMap, point: np.ndarray, factor: float) -> EquivariantMap:
    """Move every image toward ``point`` keeping the fraction ``factor`` of the distance."""
    P = np.broadcast_to(np.asarray(point, dtype=complex), fmap.images.shape)
    Q = geodesic_lifts(P, fmap.images, factor, fmap.gram)
    return EquivariantMap(fmap.mesh, fmap.rep, Q, fmap.context, fmap.seed)


def perturb_map(fmap: EquivariantMap, scale: float, rng: np.random.Generator, keep_pinned: bool = True) -> EquivariantMap:
    g = fmap.gram
    X = fmap.images
    R = rng.normal(size=X.shape) + 1j * rng.normal(size=X.shape)
    # project to X^perp: V = R + <R, X> X (since <X, X> = -1)
    V = R + hform(R, X, g)[:, None] * X
    nrm = np.sqrt(np.maximum(hform(V, V, g).real, 1e-300))
    V = V / nrm[:, None] * (0.5 * scale)
    if keep_pinned:
        V[fmap.mesh.orbit_pinned()] = 0.0
    return EquivariantMap(fmap.mesh, fmap.rep, exp_map(X, V, g), fmap.context, fmap.seed)


# ---------------------------------------------------------------- Karcher sweeps


@dataclass
class SolverReport:
    iterations: int
    energy: float
    max_displacement: float
    converged: bool
    energy_log: list[float]
    monotone: bool
    equivariance_max: float
    colors: int
    alpha: list[dict] = field(default_factory=list)
    divergence: list[str] = field(default_factory=list)
    status: str = "converged"

    def to_json(self) -> dict:
        return {
            "iterations": self.iterations,
            "energy": self.energy,
            "max_displacement": self.max_displacement,
            "converged": self.converged,
            "status": self.status,
            "monotone": self.monotone,
            "equivariance_max": self.equivariance_max,
            "colors": self.colors,
            "energy_log": self.energy_log,
            "alpha": self.alpha,
            "divergence": self.divergence,
        }


class _Sweeper:
    def __init__(self, fmap: EquivariantMap, cfg: SolverConfig):
        mesh, ctx = fmap.mesh, fmap.context
        O = mesh.n_orbits
        pinned = mesh.orbit_pinned()
        G = nx.Graph()
        G.add_nodes_from(range(O))
        G.add_edges_from(zip(ctx.edge_u.tolist(), ctx.edge_v.tolist()))
        if cfg.colorize:
            col = nx.greedy_color(G, strategy="largest_first")
            colors = np.array([col[o] for o in range(O)])
        else:
            colors = np.arange(O)
        self.classes = []
        # incidences: (target orbit, neighbor orbit, transport, weight)
        tgt = np.concatenate([ctx.edge_u, ctx.edge_v])
        nbr = np.concatenate([ctx.edge_v, ctx.edge_u])
        T = np.concatenate([ctx.T_uv, ctx.T_vu])
        w = np.concatenate([ctx.weights, ctx.weights])
        for c in range(int(colors.max()) + 1):
            members = np.nonzero((colors == c) & ~pinned)[0]
            if len(members) == 0:
                continue
            local = -np.ones(O, dtype=int)
            local[members] = np.arange(len(members))
            sel = np.nonzero(local[tgt] >= 0)[0]
            wsum = np.zeros(len(members))
            np.add.at(wsum, local[tgt[sel]], w[sel])
            self.classes.append((members, local[tgt[sel]], nbr[sel], T[sel], w[sel], wsum))
        self.n_colors = int(colors.max()) + 1
        self.cfg = cfg
        self.gram = ctx.gram

    def sweep(self, F: np.ndarray) -> float:
        g = self.gram
        sgn = _sgn(g)
        worst = 0.0
        for members, loc, nbr, T, w, wsum in self.classes:
            Y = np.einsum("kij,kj->ki", T, F[nbr])
            X = F[members]
            X0 = X
            active = wsum > 0
            for _ in range(self.cfg.inner_max):
                V, _rho = log_map(X[loc], Y, g)
                M = np.zeros_like(X)
                np.add.at(M, loc, w[:, None] * V)
                M[active] /= wsum[active, None]
                step = 2.0 * np.sqrt(np.maximum(_bform(M, M, sgn).real, 0.0))
                X = exp_map(X, M, g)
                if step.max() < self.cfg.inner_tol:
                    break
            X = _phase_fix(X)
            V, _ = log_map(X0, X, g)
            disp = 2.0 * np.sqrt(np.maximum(_bform(V, V, sgn).real, 0.0))
            worst = max(worst, float(disp.max()))
            F[members] = X
        return worst


def _tangent_basis(X: np.ndarray, sgn: np.ndarray) -> np.ndarray:
    """Form-orthonormal basis of X^perp for each row of X, shape (O, n+1, n)."""
    O, n1 = X.shape
    basis = []
    for i in range(n1 - 1):
        e = np.zeros((O, n1), dtype=complex)
        e[:, i] = 1.0
        w = e + _bform(e, X, sgn)[:, None] * X
        for q in basis:
            w = w - _bform(w, q, sgn)[:, None] * q
        w = w / np.sqrt(np.maximum(_bform(w, w, sgn).real, 1e-300))[:, None]
        basis.append(w)
    return np.stack(basis, axis=-1)


class _GaussNewton:
    """Global step solving the transported weighted Laplacian system in tangent coordinates."""

    def __init__(self, fmap: EquivariantMap):
        from scipy import sparse

        self.sparse = sparse
        ctx = fmap.context
        self.ctx = ctx
        self.free = ~fmap.mesh.orbit_pinned()
        self.index = -np.ones(len(self.free), dtype=int)
        self.index[self.free] = np.arange(int(self.free.sum()))
        self.sgn = _sgn(ctx.gram)

    def step(self, F: np.ndarray) -> np.ndarray | None:
        from scipy.sparse.linalg import spsolve

        ctx, sgn = self.ctx, self.sgn
        n = F.shape[1] - 1
        B = _tangent_basis(F, sgn)
        nf = int(self.free.sum())
        if nf == 0:
            return None
        rows, cols, vals = [], [], []
        rhs = np.zeros((nf, n), dtype=complex)
        diag = np.zeros(nf)
        for tgt, nbr, T in ((ctx.edge_u, ctx.edge_v, ctx.T_uv), (ctx.edge_v, ctx.edge_u, ctx.T_vu)):
            w = ctx.weights
            sel = self.free[tgt]
            t, nb, Tm, ww = tgt[sel], nbr[sel], T[sel], w[sel]
            X = F[t]
            Y = np.einsum("kij,kj->ki", Tm, F[nb])
            V, _ = log_map(X, Y, ctx.gram)
            it = self.index[t]
            # coordinates of V in the basis at X: B^* G V
            coords = np.einsum("kin,ki->kn", np.conj(B[t]), V * sgn)
            np.add.at(rhs, it, ww[:, None] * coords)
            np.add.at(diag, it, ww)
            fn = self.free[nb]
            if fn.any():
                ip = _bform(X[fn], Y[fn], sgn)
                ph = -ip / np.maximum(np.abs(ip), 1e-300)
                TB = np.einsum("kij,kjn->kin", Tm[fn], B[nb[fn]]) * ph[:, None, None]
                A = np.einsum("kim,kin->kmn", np.conj(B[t[fn]]) * sgn[None, :, None], TB)
                k_idx = np.nonzero(fn)[0]
                for a in range(n):
                    for b in range(n):
                        rows.append(it[fn] * n + a)
                        cols.append(self.index[nb[fn]] * n + b)
                        vals.append(-ww[k_idx] * A[:, a, b])
        for a in range(n):
            rows.append(np.arange(nf) * n + a)
            cols.append(np.arange(nf) * n + a)
            vals.append(diag.astype(complex))
        Mtx = self.sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nf * n, nf * n)
        )
        try:
            delta = spsolve(Mtx.tocsc(), rhs.reshape(-1))
        except Exception:
            return None
        if not np.all(np.isfinite(delta)):
            return None
        delta = delta.reshape(nf, n)
        D = np.zeros_like(F)
        D[self.free] = np.einsum("kin,kn->ki", B[self.free], delta)
        return D


def check_drift(fmap: EquivariantMap, eps: float = DRIFT_EPS) -> None:
    free = ~fmap.mesh.orbit_pinned()
    g = fmap.gram
    for o in np.nonzero(free)[0]:
        v = normalize_max_entry(fmap.images[o])
        if abs(hform(v, v, g)) < eps:
            raise BoundaryDriftError(f"boundary-drift: orbit {o} approaches the ideal boundary", int(o))


def minimize(fmap: EquivariantMap, cfg: SolverConfig | None = None) -> tuple[EquivariantMap, SolverReport]:
    cfg = cfg or SolverConfig()
    out = fmap.copy()
    sw = _Sweeper(out, cfg)
    F = out.images
    energies = [discrete_energy(out)]
    eq = out.equivariance_residual() if cfg.check_equivariance else 0.0
    eq_max = eq
    disp = float("inf")
    it = 0
    monotone = True
    gn = _GaussNewton(out) if cfg.accelerate else None
    while it < cfg.max_sweeps:
        if gn is not None and it > 0 and it % cfg.sweeps_per_newton == 0 and disp > cfg.tol:
            D = gn.step(F)
            if D is not None:
                # trust region: no orbit moves farther than TRUST_RADIUS in one step
                big = 2.0 * np.sqrt(np.maximum(_bform(D, D, _sgn(out.gram)).real, 0.0)).max()
                if big > TRUST_RADIUS:
                    D = D * (TRUST_RADIUS / big)
                for frac in (1.0, 0.5, 0.25, 0.125, 0.0625):
                    trial = _phase_fix(exp_map(F, frac * D, out.gram))
                    e_trial = discrete_energy(EquivariantMap(out.mesh, out.rep, trial, out.context))
                    if e_trial < energies[-1]:
                        F[:] = trial
                        out.images = F
                        energies.append(e_trial)
                        break
        disp = sw.sweep(F)
        it += 1
        out.images = F
        e = discrete_energy(out)
        if e > energies[-1] + 1e-12 * max(1.0, abs(energies[-1])):
            monotone = False
        energies.append(e)
        if it % 50 == 0 or disp < cfg.tol:
            check_drift(out, cfg.drift_eps)
            if cfg.check_equivariance:
                eq = out.equivariance_residual()
                eq_max = max(eq_max, eq)
                if eq > cfg.equivariance_tol:
                    raise SolverError(f"equivariance residual {eq:.2e} exceeds {cfg.equivariance_tol:.0e}")
        if disp < cfg.tol:
            break
    converged = disp < cfg.tol
    report = SolverReport(
        iterations=it,
        energy=energies[-1],
        max_displacement=disp,
        converged=converged,
        energy_log=energies,
        monotone=monotone,
        equivariance_max=eq_max,
        colors=sw.n_colors,
        status="converged" if converged else "no-convergence",
    )
    return out, report


# ---------------------------------------------------------------- cusp slice energies


@dataclass
class CuspProfile:
    cusp: int
    peripheral: str
    t: np.ndarray
    slice_energy: np.ndarray
    model_slice_energy: np.ndarray
    alpha: np.ndarray
    partial_sums: np.ndarray
    slope: float
    verdict: str

    def to_json(self) -> dict:
        return {
            "cusp": self.cusp,
            "peripheral": self.peripheral,
            "t": self.t.tolist(),
            "slice_energy": self.slice_energy.tolist(),
            "model_slice_energy": self.model_slice_energy.tolist(),
            "alpha": self.alpha.tolist(),
            "partial_sums": self.partial_sums.tolist(),
            "slope": self.slope,
            "verdict": self.verdict,
        }


SLOPE_DIVERGENT = 0.5
CAUCHY_TOL = 0.05
# rows this close to the pinned truncation carry a boundary layer and are left out of the verdict
PINNED_COLLAR = 1.0


def _row_of_triangles(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Cusp index and strip row for each triangle (-1 outside strips)."""
    heights = mesh.row_heights
    cusp = np.full(len(mesh.triangles), -1)
    row = np.full(len(mesh.triangles), -1)
    for k, tri in enumerate(mesh.triangles):
        rs = [mesh.recipes[v] for v in tri]
        if all(r.kind == STRIP for r in rs) and len({r.cusp for r in rs}) == 1:
            t = max(r.params[1] for r in rs)
            idx = int(np.searchsorted(heights, t - 1e-12))
            cusp[k] = rs[0].cusp
            row[k] = max(idx - 1, 0)
    return cusp, row


def cusp_energy_profile(fmap: EquivariantMap, model: EquivariantMap | None = None) -> list[CuspProfile]:
    mesh = fmap.mesh
    if not mesh.model.cusps or len(mesh.row_heights) < 2:
        return []
    model = model or model_map(fmap.rep, mesh)
    ef = triangle_energies(fmap)
    em = triangle_energies(model)
    cusp, row = _row_of_triangles(mesh)
    h = mesh.row_heights
    dt = np.diff(h)
    mids = 0.5 * (h[:-1] + h[1:])
    out = []
    types = [t.value for t in fmap.rep.peripheral_types()]
    for i in range(len(mesh.model.cusps)):
        sf = np.zeros(len(dt))
        sm = np.zeros(len(dt))
        sel = cusp == i
        np.add.at(sf, row[sel], ef[sel])
        np.add.at(sm, row[sel], em[sel])
        sf /= dt
        sm /= dt
        alpha = sf - sm
        partial = np.cumsum(alpha * dt)
        inner = mids <= h[-1] - PINNED_COLLAR
        if inner.sum() < 4:
            inner = np.ones(len(mids), dtype=bool)
        mi, si, pi = mids[inner], sf[inner], partial[inner]
        upper = mi >= 0.5 * mi[-1]
        if upper.sum() >= 2 and np.all(si[upper] > 0):
            slope = float(np.polyfit(mi[upper], np.log(si[upper]), 1)[0])
        else:
            slope = float("-inf")
        tail = abs(pi[-1] - pi[max(len(pi) - 4, 0)])
        if slope > SLOPE_DIVERGENT:
            verdict = "Divergent"
        elif tail <= CAUCHY_TOL * (1.0 + abs(pi[-1])):
            verdict = "Convergent"
        else:
            verdict = "Divergent"
        out.append(CuspProfile(i, types[i], mids, sf, sm, alpha, partial, slope, verdict))
    return out


# ---------------------------------------------------------------- retraction energy


@dataclass
class RetractionEnergy:
    m: int
    divergent: bool
    value: float | None
    quad_error: float

    def to_json(self) -> dict:
        return {"m": self.m, "divergent": self.divergent, "value": self.value, "quad_error": self.quad_error}


def retraction_energy(m: int, cutoff: float = 40.0) -> RetractionEnergy:
    """1/2 int_0^inf (2(m-1) e^t + e^{2t}) e^{-mt} dt per unit transverse volume.

    The integral over [0, cutoff] is adaptive quadrature. The tail beyond the cutoff is
    added in closed form. For m = 2 the e^{2t} term makes the integrand tend to 1/2, so
    the energy is infinite.
    """
    if int(m) != m or m < 2:
        raise SolverError("retraction energy needs an integer m >= 2")
    m = int(m)

    def f(t: float) -> float:
        return 0.5 * (2.0 * (m - 1) * math.exp((1 - m) * t) + math.exp((2 - m) * t))

    if m == 2:
        return RetractionEnergy(m, True, None, 0.0)
    head, err = integrate.quad(f, 0.0, cutoff, epsabs=1e-13, epsrel=1e-13, limit=200)
    tail = 0.5 * (2.0 * math.exp((1 - m) * cutoff) + math.exp((2 - m) * cutoff) / (m - 2))
    return RetractionEnergy(m, False, head + tail, err)
