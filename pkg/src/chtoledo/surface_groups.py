"""Surface groups: presentations, built-in Fuchsian polygons, representations and doubling.

A word is a tuple of nonzero integers. Letter ``+k`` stands for generator ``k-1``, and
``-k`` stands for its inverse. Words are evaluated left to right as matrix products.

The built-in models are regular polygons centered at 0 in the Poincaré disk. Each
pairing ``g_j`` maps side ``s_j`` onto side ``s'_j``. The polygon across ``s'_j`` is
``g_j P`` and the polygon across ``s_j`` is ``g_j^{-1} P``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hermitian_core import (
    HermitianError,
    HermitianForm,
    cayley_matrix,
    embed_block,
    hform,
    normalize_max_entry,
    unitary_inverse,
    validate_group,
)
from .isometry_toolkit import IsometryClass, IsometryType, classify

Word = tuple[int, ...]

SUPPORTED = ((2, 0), (1, 1), (0, 3), (0, 4), (1, 2))
HOROCYCLE_LENGTH = 1.0


class SurfaceError(HermitianError):
    pass


# ---------------------------------------------------------------- words


def word_reduce(w: Word) -> Word:
    out: list[int] = []
    for letter in w:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def word_inverse(w: Word) -> Word:
    return tuple(-x for x in reversed(w))


def word_mul(*ws: Word) -> Word:
    return word_reduce(tuple(x for w in ws for x in w))


def commutator(a: Word, b: Word) -> Word:
    return word_mul(a, b, word_inverse(a), word_inverse(b))


def word_eval(w: Word, mats: list[np.ndarray], inverses: list[np.ndarray] | None = None) -> np.ndarray:
    size = mats[0].shape[0]
    if inverses is None:
        inverses = [np.linalg.inv(m) for m in mats]
    out = np.eye(size, dtype=complex)
    for letter in w:
        out = out @ (mats[letter - 1] if letter > 0 else inverses[-letter - 1])
    return out


def word_to_str(w: Word, names: list[str] | None = None) -> str:
    if not w:
        return "1"
    parts = []
    for x in w:
        name = names[abs(x) - 1] if names else f"g{abs(x)}"
        parts.append(name if x > 0 else name + "^-1")
    return " ".join(parts)


# ---------------------------------------------------------------- topology


@dataclass(frozen=True)
class SurfaceTopology:
    genus: int
    punctures: int

    def __post_init__(self) -> None:
        if self.genus < 0 or self.punctures < 0:
            raise SurfaceError("genus and punctures must be nonnegative")
        if self.chi >= 0:
            raise SurfaceError("surface must have negative Euler characteristic")

    @property
    def chi(self) -> int:
        return 2 - 2 * self.genus - self.punctures

    @property
    def bound(self) -> float:
        """The Milnor-Wood bound -2 pi chi."""
        return -2.0 * np.pi * self.chi

    @property
    def rank(self) -> int:
        """Number of generators of the polygon presentation."""
        return 2 * self.genus + max(self.punctures - 1, 0) if self.punctures else 2 * self.genus


# ---------------------------------------------------------------- Möbius helpers (disk, SU(1,1))


def mobius(M: np.ndarray, z):
    return (M[0, 0] * z + M[0, 1]) / (M[1, 0] * z + M[1, 1])


def translation_to(m: complex) -> np.ndarray:
    """z -> (z + m) / (1 + conj(m) z)."""
    return np.array([[1.0, m], [np.conj(m), 1.0]], dtype=complex) / np.sqrt(1.0 - abs(m) ** 2)


def rotation(theta: float) -> np.ndarray:
    return np.diag([np.exp(0.5j * theta), np.exp(-0.5j * theta)])


def su11_inverse(M: np.ndarray) -> np.ndarray:
    return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / (M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])


def disk_distance(a: complex, b: complex) -> float:
    return 2.0 * np.arctanh(abs(a - b) / abs(1.0 - np.conj(a) * b))


def _side_midpoint(a: complex, b: complex, ideal: bool, half_angle: float) -> complex:
    direction = (a + b) / abs(a + b)
    if ideal:
        return direction * (1.0 - np.sin(half_angle)) / np.cos(half_angle)
    g = np.diag([1.0, -1.0]).astype(complex)
    P = np.array([a, 1.0], dtype=complex)
    Q = np.array([b, 1.0], dtype=complex)
    P = P / np.sqrt(-hform(P, P, g).real)
    Q = Q / np.sqrt(-hform(Q, Q, g).real)
    ip = hform(P, Q, g)
    Q = Q * (-ip / abs(ip))
    M = P + Q
    return M[0] / M[1]


def _side_frame(mid: complex, end: complex) -> np.ndarray:
    """Isometry sending 0 to the side midpoint and the positive real axis toward ``end``."""
    T = translation_to(mid)
    w = mobius(su11_inverse(T), end)
    return T @ rotation(float(np.angle(w)))


MODEL_LAYOUTS: dict[tuple[int, int], tuple[int, bool, float | None, list[tuple[int, int]]]] = {
    (2, 0): (8, False, np.pi / 4, [(0, 2), (1, 3), (4, 6), (5, 7)]),
    (1, 1): (4, True, None, [(0, 2), (1, 3)]),
    (0, 3): (4, True, None, [(0, 1), (2, 3)]),
    (0, 4): (6, True, None, [(0, 1), (2, 3), (4, 5)]),
    (1, 2): (6, True, None, [(0, 3), (1, 4), (2, 5)]),
}


# ---------------------------------------------------------------- Fuchsian models


@dataclass
class CuspData:
    """An ideal vertex cycle, unfolded around its first corner.

    ``corners[j]`` is the pair (polygon vertex index, word eta_j). The word eta_j sends
    corner j onto the unfolded picture at the first vertex. ``frame`` is an SU(1,1)
    matrix. It sends Siegel horospherical coordinates (v, t) to the disk, and under it
    the peripheral element acts as v -> v + length. ``corner_v[j]`` holds
    (v_left, v_center, v_right) for corner j.
    """

    corners: list[tuple[int, Word]]
    peripheral: Word
    frame: np.ndarray
    length: float
    corner_v: list[tuple[float, float, float]]

    def disk_point(self, corner: int, v, t) -> np.ndarray:
        """Disk coordinates of frame points (v, t) seen from polygon corner ``corner``."""
        v = np.asarray(v, dtype=float)
        t = np.asarray(t, dtype=float)
        w = 0.5 * (np.exp(t) - 1j * v)
        siegel = np.stack([-w, np.ones_like(w)], axis=-1)
        ball = siegel @ np.linalg.inv(cayley_matrix(1)).T
        M = self._corner_matrix(corner) @ self.frame
        X = ball @ M.T
        return X[..., 0] / X[..., 1]

    def _corner_matrix(self, corner: int) -> np.ndarray:
        return self._eta_inv[corner]

    _eta_inv: list[np.ndarray] = field(default_factory=list, repr=False)


@dataclass
class FuchsianModel:
    topology: SurfaceTopology
    vertices: np.ndarray
    ideal: bool
    pairs: list[tuple[int, int]]
    generators: list[np.ndarray]
    side_letter: dict[int, int]
    partner: dict[int, int]
    midpoints: np.ndarray
    cycles: list[tuple[list[tuple[int, Word]], Word]]
    cusps: list[CuspData]
    relator: Word | None
    standard_words: dict[str, Word]

    @property
    def n_sides(self) -> int:
        return len(self.vertices)

    @property
    def inverses(self) -> list[np.ndarray]:
        return [su11_inverse(g) for g in self.generators]

    def evaluate(self, w: Word) -> np.ndarray:
        return word_eval(w, self.generators, self.inverses)

    def letter_matrix(self, letter: int) -> np.ndarray:
        return self.generators[letter - 1] if letter > 0 else su11_inverse(self.generators[-letter - 1])

    def polygon_area(self) -> float:
        """Gauss-Bonnet for the geodesic polygon: (N - 2) pi minus the interior angles."""
        N = self.n_sides
        total = (N - 2) * np.pi
        if not self.ideal:
            for k in range(N):
                total -= _interior_angle(self.vertices[k - 1], self.vertices[k], self.vertices[(k + 1) % N])
        return float(total)

    def polygon_area_quadrature(self, order: int = 24) -> float:
        """Area by integrating the disk density over the fan of triangles from the center."""
        xs, ws = np.polynomial.legendre.leggauss(order)
        u = 0.5 * (xs + 1.0)
        w = 0.5 * ws
        total = 0.0
        N = self.n_sides
        for k in range(N):
            a, b = self.vertices[k], self.vertices[(k + 1) % N]
            total += _fan_area(a, b, self.ideal, u, w)
        return float(total)

    def relator_residual(self) -> float:
        if self.relator is None:
            rel = self.standard_relation()
        else:
            rel = self.relator
        M = self.evaluate(rel)
        return float(min(np.abs(M - np.eye(2)).max(), np.abs(M + np.eye(2)).max()))

    def standard_relation(self) -> Word:
        sw = self.standard_words
        parts: list[Word] = []
        for i in range(self.topology.genus):
            parts.append(commutator(sw[f"a{i + 1}"], sw[f"b{i + 1}"]))
        for j in range(self.topology.punctures):
            parts.append(sw[f"c{j + 1}"])
        return word_mul(*parts)

    def pairing_residual(self) -> float:
        """Each pairing must send the endpoints of its side onto the partner side (reversed)."""
        N = self.n_sides
        res = 0.0
        for j, (s, sp) in enumerate(self.pairs):
            g = self.generators[j]
            res = max(res, abs(mobius(g, self.vertices[s]) - self.vertices[(sp + 1) % N]))
            res = max(res, abs(mobius(g, self.vertices[(s + 1) % N]) - self.vertices[sp]))
            res = max(res, abs(mobius(g, self.midpoints[s]) - self.midpoints[sp]))
        return float(res)


def _interior_angle(prev: complex, at: complex, nxt: complex) -> float:
    T = translation_to(at)
    Ti = su11_inverse(T)
    a = mobius(Ti, prev)
    b = mobius(Ti, nxt)
    ang = abs(np.angle(b / a))
    return float(ang)


def _fan_area(a: complex, b: complex, ideal: bool, u: np.ndarray, w: np.ndarray) -> float:
    """Area of the geodesic triangle (0, a, b), parametrized by radius along rays from 0."""
    if not ideal:
        # polar coordinates: radial extent from 0 to the geodesic side along each ray
        thetas_a, thetas_b = np.angle(a), np.angle(b)
        dth = np.angle(np.exp(1j * (thetas_b - thetas_a)))
        total = 0.0
        for ui, wi in zip(u, w):
            th = thetas_a + ui * dth
            r = _ray_hit(a, b, th)
            # integral of 4 r / (1 - r^2)^2 dr from 0 to r
            total += wi * abs(dth) * 2.0 * r**2 / (1.0 - r**2)
        return total
    # ideal sides reach the circle, so the area density must be integrated to radius 1.
    # The triangle (0, a, b) has angles at a and b equal to 0 and angle dth at 0.
    dth = abs(np.angle(b / a))
    return float(np.pi - dth)


def _ray_hit(a: complex, b: complex, theta: float) -> float:
    """Radius at which the ray of angle theta meets the geodesic through a and b."""
    # the geodesic is a circle orthogonal to the unit circle: |z - c|^2 = |c|^2 - 1
    # through a and b; solve for c and intersect with the ray
    A = np.array([[2 * a.real, 2 * a.imag], [2 * b.real, 2 * b.imag]])
    rhs = np.array([abs(a) ** 2 + 1.0, abs(b) ** 2 + 1.0])
    try:
        cx, cy = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return float(np.linalg.norm([a.real, a.imag]))
    d = np.array([np.cos(theta), np.sin(theta)])
    cd = cx * d[0] + cy * d[1]
    # r^2 - 2 r (c.d) + 1 = 0, take the smaller root
    return float(cd - np.sqrt(cd * cd - 1.0))


def _regular_polygon(N: int, ideal: bool, alpha: float | None) -> tuple[np.ndarray, np.ndarray]:
    phi = np.pi / N
    th = -phi + 2.0 * phi * np.arange(N)
    if ideal:
        r = 1.0
    else:
        R = np.arccosh(1.0 / np.tan(phi) / np.tan(alpha / 2.0))
        r = np.tanh(R / 2.0)
    V = r * np.exp(1j * th)
    mids = np.array([_side_midpoint(V[k], V[(k + 1) % N], ideal, phi) for k in range(N)])
    return V, mids


def _vertex_cycles(V: np.ndarray, gens: list[np.ndarray], letter: dict[int, int], partner: dict[int, int]):
    N = len(V)
    inv = [su11_inverse(g) for g in gens]

    def lm(x: int) -> np.ndarray:
        return gens[x - 1] if x > 0 else inv[-x - 1]

    seen: set[int] = set()
    out = []
    for k0 in range(N):
        if k0 in seen:
            continue
        W, side = k0, (k0 - 1) % N
        word: list[int] = []
        corners: list[tuple[int, Word]] = []
        while True:
            corners.append((W, tuple(word)))
            seen.add(W)
            x = letter[side]
            h = lm(x)
            word.append(x)
            sp = partner[side]
            img = mobius(su11_inverse(h), V[W])
            nxt = None
            for cand in (sp, (sp + 1) % N):
                if abs(img - V[cand]) < 1e-9:
                    nxt = cand
            if nxt is None:
                raise SurfaceError("side pairing does not map vertices to vertices")
            other = [s for s in ((nxt - 1) % N, nxt) if s != sp][0]
            W, side = nxt, other
            if W == k0 and side == (k0 - 1) % N:
                break
        out.append((corners, tuple(word)))
    return out


def _frame_coords(E: np.ndarray, z: complex) -> tuple[float, float]:
    """(v, t) of a disk point in a cusp frame. Ideal points return t = inf."""
    x = cayley_matrix(1) @ su11_inverse(E) @ np.array([z, 1.0])
    w = -x[0] / x[1]
    v = -2.0 * w.imag
    h = 2.0 * w.real
    return float(v), float(np.log(h)) if h > 1e-300 else float("inf")


def _cusp_data(V, gens, corners, word, length) -> CuspData:
    N = len(V)
    inv = [su11_inverse(g) for g in gens]
    k0 = corners[0][0]
    c = word_eval(word, gens, inv)
    E0 = rotation(float(np.angle(V[k0])) - np.pi)
    Cm = cayley_matrix(1)
    s0 = Cm @ su11_inverse(E0) @ c @ E0 @ np.linalg.inv(Cm)
    s0 = s0 / s0[1, 1]
    nu0 = float((2.0 * s0[0, 1] / 1j).real)
    if abs(s0[1, 0]) > 1e-9 or nu0 <= 0:
        raise SurfaceError("vertex cycle does not translate in the positive direction")
    s = 0.5 * np.log(length / nu0)
    F = np.diag([np.exp(-s), np.exp(s)]).astype(complex)
    E = E0 @ np.linalg.inv(Cm) @ F @ Cm
    eta_inv = []
    corner_v = []
    for W, eta in corners:
        et = word_eval(eta, gens, inv)
        eta_inv.append(su11_inverse(et))
        # sides at corner W: incoming (W-1) ends at W and starts at V[W-1]; outgoing starts at W
        left = _frame_coords(E, mobius(et, V[(W + 1) % N]))[0]
        right = _frame_coords(E, mobius(et, V[(W - 1) % N]))[0]
        center = _frame_coords(E, mobius(et, 0.0))[0]
        corner_v.append((left, center, right))
    data = CuspData(list(corners), tuple(word), E, length, corner_v)
    data._eta_inv = eta_inv
    return data


def build_fuchsian(genus: int, punctures: int) -> FuchsianModel:
    key = (int(genus), int(punctures))
    if key not in MODEL_LAYOUTS:
        raise SurfaceError(f"unsupported surface {key}; supported (genus, punctures): {list(SUPPORTED)}")
    topo = SurfaceTopology(*key)
    N, ideal, alpha, pairs = MODEL_LAYOUTS[key]
    V, mids = _regular_polygon(N, ideal, alpha)
    gens = []
    letter: dict[int, int] = {}
    partner: dict[int, int] = {}
    for j, (s, sp) in enumerate(pairs):
        Fs = _side_frame(mids[s], V[(s + 1) % N])
        Fsp = _side_frame(mids[sp], V[(sp + 1) % N])
        g = Fsp @ rotation(np.pi) @ su11_inverse(Fs)
        gens.append(g / np.sqrt(np.linalg.det(g)))
        letter[sp] = j + 1
        letter[s] = -(j + 1)
        partner[s] = sp
        partner[sp] = s
    cycles = _vertex_cycles(V, gens, letter, partner)
    cusps = [_cusp_data(V, gens, c, w, HOROCYCLE_LENGTH) for c, w in cycles] if ideal else []
    relator = cycles[0][1] if not ideal else None
    std = _standard_words(key, cycles)
    return FuchsianModel(topo, V, ideal, list(pairs), gens, letter, partner, mids, cycles, cusps, relator, std)


def _standard_words(key: tuple[int, int], cycles) -> dict[str, Word]:
    """Generators of the standard presentation, as words in the side pairings."""
    cw = [w for _, w in cycles]
    if key == (2, 0):
        # relator [g4, g3^-1][g2, g1^-1]
        return {"a1": (4,), "b1": (-3,), "a2": (2,), "b2": (-1,)}
    if key == (1, 1):
        return {"a1": (-1,), "b1": (2,), "c1": cw[0]}
    if key == (1, 2):
        return {"a1": (-2,), "b1": (3,), "c1": cw[0], "c2": cw[1]}
    return {f"c{j + 1}": w for j, w in enumerate(cw)}


# ---------------------------------------------------------------- representations


@dataclass
class SurfaceRep:
    """Generator images (Ball form, SU(n,1)) indexed like the model's side pairings."""

    model: FuchsianModel
    n: int
    generators: list[np.ndarray]
    label: str = "custom"
    _classes: list[IsometryClass] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.generators) != len(self.model.generators):
            raise SurfaceError(
                f"expected {len(self.model.generators)} generator images, got {len(self.generators)}"
            )
        form = HermitianForm.ball(self.n)
        gens = []
        for k, g in enumerate(self.generators):
            m = np.asarray(g, dtype=complex)
            rep = validate_group(m, form, 1e-8)
            if not rep.ok:
                raise SurfaceError(
                    f"generator {k + 1} is not in SU({self.n},1): form residual {rep.form_residual:.2e}, "
                    f"det residual {rep.det_residual:.2e}"
                )
            gens.append(m)
        self.generators = gens
        if self.model.relator is not None:
            res = self.relator_residual()
            if res > 1e-8:
                raise SurfaceError(f"relator residual {res:.2e} exceeds 1e-8")

    @property
    def topology(self) -> SurfaceTopology:
        return self.model.topology

    @property
    def form(self) -> HermitianForm:
        return HermitianForm.ball(self.n)

    @property
    def inverses(self) -> list[np.ndarray]:
        f = self.form
        return [unitary_inverse(g, f) for g in self.generators]

    def evaluate(self, w: Word) -> np.ndarray:
        return word_eval(w, self.generators, self.inverses)

    def relator_residual(self) -> float:
        rel = self.model.relator if self.model.relator is not None else self.model.standard_relation()
        M = self.evaluate(rel)
        # projective identity: M is a scalar root of unity times the identity
        lam = np.trace(M) / M.shape[0]
        return float(np.abs(M - lam * np.eye(M.shape[0])).max() + abs(abs(lam) - 1.0))

    def peripheral_classes(self) -> list[IsometryClass]:
        if self._classes is None:
            self._classes = [classify(self.evaluate(c.peripheral), self.form) for c in self.model.cusps]
        return self._classes

    def peripheral_types(self) -> list[IsometryType]:
        return [c.type for c in self.peripheral_classes()]

    def tame(self) -> bool:
        return all(t is not IsometryType.HYPERBOLIC for t in self.peripheral_types())

    def common_boundary_fixed_point(self, tol: float = 1e-8) -> np.ndarray | None:
        """A null vector fixed projectively by every generator, if one exists."""
        candidates: list[np.ndarray] = []
        g = self.form.gram
        for m in self.generators:
            vals, vecs = np.linalg.eig(m)
            for k in range(vecs.shape[1]):
                v = normalize_max_entry(vecs[:, k])
                if abs(hform(v, v, g)) <= 1e-6:
                    candidates.append(v)
        for v in candidates:
            v = _refine_null(v, g)
            ok = True
            for m in self.generators:
                img = m @ v
                lam = np.vdot(v, img) / np.vdot(v, v)
                if np.linalg.norm(img - lam * v) > tol * max(1.0, np.linalg.norm(img)):
                    ok = False
                    break
            if ok:
                return v
        return None

    def reductive_hint(self) -> bool:
        return self.common_boundary_fixed_point() is None

    def conjugated(self, h: np.ndarray) -> "SurfaceRep":
        hi = np.linalg.inv(h)
        return SurfaceRep(self.model, self.n, [h @ g @ hi for g in self.generators], self.label + "^conj")

    def complex_conjugate(self) -> "SurfaceRep":
        """The representation followed by the antiholomorphic involution X -> conj(X)."""
        return SurfaceRep(self.model, self.n, [np.conj(g) for g in self.generators], self.label + "^bar")

    def precomposed(self, words: list[Word], label: str = "auto") -> "SurfaceRep":
        """rho o sigma for the automorphism sending generator j to ``words[j]``."""
        return SurfaceRep(self.model, self.n, [self.evaluate(w) for w in words], self.label + "^" + label)

    def to_json(self) -> dict:
        from .serialization import matrix_to_json

        return {
            "surface": {"genus": self.topology.genus, "punctures": self.topology.punctures},
            "n": self.n,
            "label": self.label,
            "generators": [matrix_to_json(g) for g in self.generators],
        }


def mirror_automorphism(model: FuchsianModel) -> list[Word]:
    """Generator images of an orientation-reversing automorphism induced by a polygon reflection.

    Candidate reflections z -> e^{i phi} conj(z) run through the axes of the regular
    polygon. A reflection qualifies when it conjugates every side pairing into another
    side pairing (up to sign), and then generator j maps to that letter.
    """
    V = model.vertices
    N = len(V)
    args = np.angle(V)
    phis = [2.0 * args[k] for k in range(N)] + [args[k] + args[(k + 1) % N] for k in range(N)]
    letters = [k + 1 for k in range(len(model.generators))] + [-(k + 1) for k in range(len(model.generators))]
    for phi in phis:
        D = np.diag([np.exp(0.5j * phi), np.exp(-0.5j * phi)])
        Di = np.linalg.inv(D)
        words: list[Word] = []
        for g in model.generators:
            H = D @ np.conj(g) @ Di
            hit = None
            for ell in letters:
                L = model.letter_matrix(ell)
                if min(np.abs(H - L).max(), np.abs(H + L).max()) < 1e-9:
                    hit = ell
                    break
            if hit is None:
                break
            words.append((hit,))
        if len(words) == len(model.generators):
            return words
    raise SurfaceError("no polygon reflection preserves the side pairing")


def _refine_null(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    return normalize_max_entry(v)


def fuchsian_rep(model: FuchsianModel, n: int = 1) -> SurfaceRep:
    """The uniformizing inclusion, embedded in the first and last coordinates."""
    return SurfaceRep(model, n, [embed_block(g, n) for g in model.generators], "fuchsian")


def deformed_fuchsian_rep(model: FuchsianModel, stretch: float, n: int = 1) -> SurfaceRep:
    """Stretch each generator's translation length by ``stretch``, keeping its axis."""
    from scipy.linalg import expm, logm

    gens = []
    for g in model.generators:
        L = logm(g)
        gens.append(embed_block(expm(stretch * L), n))
    return SurfaceRep(model, n, gens, f"stretched-{stretch:g}")


def bent_rep(model: FuchsianModel, angle: float, n: int = 2) -> SurfaceRep:
    """Fuchsian rep with the first generator conjugated by a rotation leaving the complex line."""
    if n < 2:
        raise SurfaceError("bending needs target dimension at least 2")
    base = fuchsian_rep(model, n)
    K = np.zeros((n + 1, n + 1), dtype=complex)
    K[0, 1], K[1, 0] = -angle, angle
    from scipy.linalg import expm

    U = expm(K)
    gens = list(base.generators)
    gens[0] = U @ gens[0] @ U.conj().T
    return SurfaceRep(model, n, gens, f"bent-{angle:g}")


def random_su_n1(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """exp of a random element of the Lie algebra su(n, 1)."""
    from scipy.linalg import expm

    g = HermitianForm.ball(n).gram
    A = rng.normal(size=(n + 1, n + 1)) + 1j * rng.normal(size=(n + 1, n + 1))
    K = A - A.conj().T  # skew-Hermitian
    X = g @ K  # X^* g + g X = 0
    X = X - np.trace(X) / (n + 1) * np.eye(n + 1)
    M = expm(scale * 0.5 * X)
    return M / np.linalg.det(M) ** (1.0 / (n + 1))


def random_rep(model: FuchsianModel, n: int, rng: np.random.Generator, scale: float = 1.0) -> SurfaceRep:
    if model.relator is not None:
        raise SurfaceError("random representations need a free (punctured) surface group")
    return SurfaceRep(model, n, [random_su_n1(n, rng, scale) for _ in model.generators], "random")


def upper_triangular_rep(model: FuchsianModel, n: int, rng: np.random.Generator) -> SurfaceRep:
    """Random generators in the stabilizer of a boundary point (non-reductive)."""
    from .isometry_toolkit import HeisenbergElement, StabilizerElement, to_matrix
    from scipy.stats import unitary_group

    gens = []
    siegel = HermitianForm.siegel(n)
    ball = HermitianForm.ball(n)
    for _ in model.generators:
        xi = rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)
        A = unitary_group.rvs(n - 1, random_state=rng) if n > 2 else np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.eye(n - 1)
        elem = StabilizerElement(HeisenbergElement(xi, rng.normal()), A, rng.normal())
        gens.append(to_matrix(elem, ball))
    del siegel
    if model.relator is not None:
        raise SurfaceError("upper-triangular reps are only generated for free surface groups")
    return SurfaceRep(model, n, gens, "upper-triangular")


def reflection_across_axis(cls: IsometryClass) -> np.ndarray:
    """Matrix M with s(X) = M conj(X) the geodesic symmetry fixing the axis of a hyperbolic element."""
    if cls.form.n != 1:
        raise SurfaceError("geodesic symmetries are built for n = 1")
    a, r = cls.attracting, cls.repelling
    za = a[0] / a[1]
    zr = r[0] / r[1]
    # E maps -1 to zr and +1 to za
    E = _su11_from_boundary(zr, za)
    return E @ np.conj(su11_inverse(E))


def _su11_from_boundary(p: complex, q: complex) -> np.ndarray:
    """An element of SU(1,1) sending -1 to p and 1 to q."""
    # Möbius maps of the disk preserving the circle: compose the Cayley map to the upper
    # half plane, a real affine map, and back.
    def to_uhp(z):
        return 1j * (1 + z) / (1 - z)

    P, Q = to_uhp(p), to_uhp(q)
    # -1 -> 0, 1 -> infinity in the upper half plane; send 0 -> P and infinity -> Q
    if np.isinf(Q) or abs(1 - q) < 1e-14:
        A = np.array([[1.0, P.real], [0.0, 1.0]], dtype=complex)
    elif abs(1 + p) < 1e-14:
        A = np.array([[Q.real, 0.0], [1.0, 1.0]], dtype=complex)
    else:
        A = np.array([[Q.real, P.real], [1.0, 1.0]], dtype=complex)
    if np.linalg.det(A).real < 0:
        A = A @ np.diag([-1.0, 1.0])
    A = A / np.sqrt(np.linalg.det(A))
    K = np.array([[1j, 1j], [-1.0, 1.0]], dtype=complex)  # disk -> uhp
    K = K / np.sqrt(np.linalg.det(K))
    M = su11_inverse(K) @ A @ K
    M = M / np.sqrt(np.linalg.det(M))
    return M


@dataclass
class DoubledRep:
    rep: SurfaceRep
    half: SurfaceRep
    symmetry: np.ndarray


def double(rep: SurfaceRep) -> DoubledRep:
    """Double a punctured-torus representation across the axis of its hyperbolic peripheral."""
    key = (rep.topology.genus, rep.topology.punctures)
    if rep.n != 1:
        raise SurfaceError("doubling needs a representation into SU(1,1)")
    classes = rep.peripheral_classes()
    hyper = [c for c in classes if c.type is IsometryType.HYPERBOLIC]
    if not hyper:
        raise SurfaceError("nothing to double: no hyperbolic peripheral image")
    if key != (1, 1):
        raise SurfaceError("doubling is implemented for the punctured torus (genus-2 double)")
    if not rep.reductive_hint():
        raise SurfaceError("doubling needs a reductive representation")
    M = reflection_across_axis(hyper[0])

    def sym(A: np.ndarray) -> np.ndarray:
        return M @ np.conj(A) @ np.conj(M)

    g1, g2 = rep.generators
    g1i, g2i = (su11_inverse(g) for g in (g1, g2))
    octagon = build_fuchsian(2, 0)
    # octagon relator [g4, g3^-1][g2, g1^-1]; the first half copies the square, the second half mirrors it
    gens = [g1, g2, sym(g2i), sym(g1i)]
    doubled = SurfaceRep(octagon, 1, gens, "double")
    return DoubledRep(doubled, rep, M)
