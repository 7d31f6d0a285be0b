"""Triangulations of a fundamental polygon with cusp strips, and the orbit bookkeeping.

The core of the polygon is coned from its center. For punctured surfaces each ideal
corner is cut at the t = 0 horocycle of its cusp frame. The region between that horocycle
and the core is a strip of horospherical cells, and each strip runs up to height
t = truncation. The polygon sides between two horocycles are covered by bands.

Every mesh vertex records how it was built (its recipe). Maps can then be seeded
by replaying the same construction in the target space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .surface_groups import (
    FuchsianModel,
    SurfaceError,
    Word,
    mobius,
    su11_inverse,
    word_mul,
)

CENTER, POLYGON_VERTEX, STRIP, CONE, BAND = range(5)
MATCH_TOL = 1e-7  # hyperbolic distance under which two mesh points are identified


class MeshError(SurfaceError):
    pass


@dataclass(frozen=True)
class Recipe:
    """How a vertex was placed.

    STRIP: cusp, corner, v, t. CONE and BAND: geodesic interpolation between two
    geodesic points whose endpoints are the listed anchor vertices. CONE uses
    (center, A, B) with parameters (r, u): the point at fraction r from the center
    toward the point at fraction u along AB. BAND uses (A_mu, B_mu) with parameter lam.
    """

    kind: int
    anchors: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    cusp: int = -1
    corner: int = -1


@dataclass
class Mesh:
    model: FuchsianModel
    resolution: float
    truncation: float
    positions: np.ndarray
    recipes: list[Recipe]
    triangles: np.ndarray
    orbit: np.ndarray
    orbit_rep: np.ndarray
    words: list[Word]
    edges: np.ndarray
    edge_weights: np.ndarray
    clamped_weights: int
    pinned: np.ndarray
    triangle_area: np.ndarray
    boundary_edges: list[list[tuple[int, int, int]]] = field(default_factory=list)
    strip_rows: list[list[list[int]]] = field(default_factory=list)
    row_heights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_orbits(self) -> int:
        return len(self.orbit_rep)

    def total_area(self) -> float:
        return float(self.triangle_area.sum())

    def expected_area(self) -> float:
        """Area of the truncated surface: -2 pi chi minus the cusp tails above the cut."""
        tails = sum(c.length * math.exp(-self.truncation) for c in self.model.cusps)
        return self.model.topology.bound - tails

    def orbit_pinned(self) -> np.ndarray:
        out = np.zeros(self.n_orbits, dtype=bool)
        out[self.orbit[self.pinned]] = True
        return out

    def summary(self) -> dict:
        return {
            "vertices": self.n_vertices,
            "orbits": self.n_orbits,
            "triangles": int(len(self.triangles)),
            "edge_orbits": int(len(self.edges)),
            "clamped_weights": int(self.clamped_weights),
            "area": self.total_area(),
            "expected_area": self.expected_area(),
            "resolution": self.resolution,
            "truncation": self.truncation,
        }


# ---------------------------------------------------------------- disk geometry


def _lift(z: complex) -> np.ndarray:
    v = np.array([z, 1.0], dtype=complex)
    return v / np.sqrt(1.0 - abs(z) ** 2)


def disk_geodesic(a: complex, b: complex, s: float) -> complex:
    """Point at fraction s along the geodesic from a to b."""
    if s == 0.0:
        return complex(a)
    if s == 1.0:
        return complex(b)
    T = np.array([[1.0, a], [np.conj(a), 1.0]], dtype=complex)
    w = mobius(su11_inverse(T), b)
    r = abs(w)
    if r == 0.0:
        return complex(a)
    if r < 1e-150:
        # tanh(s atanh r) / r -> s; avoids subnormal division
        return complex(mobius(T, s * w))
    d = 2.0 * math.atanh(r)
    return complex(mobius(T, math.tanh(s * d / 2.0) * w / r))


def disk_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    num = np.abs(a - b)
    den = np.abs(1.0 - np.conj(a) * b)
    return 2.0 * np.arctanh(np.minimum(num / den, 1.0 - 1e-16))


def triangle_angles(la: np.ndarray, lb: np.ndarray, lc: np.ndarray) -> np.ndarray:
    """Angles opposite to sides a, b, c of hyperbolic triangles (law of cosines)."""
    ca, cb, cc = np.cosh(la), np.cosh(lb), np.cosh(lc)
    sa, sb, sc = np.sinh(la), np.sinh(lb), np.sinh(lc)
    A = np.arccos(np.clip((cb * cc - ca) / (sb * sc), -1.0, 1.0))
    B = np.arccos(np.clip((ca * cc - cb) / (sa * sc), -1.0, 1.0))
    C = np.arccos(np.clip((ca * cb - cc) / (sa * sb), -1.0, 1.0))
    return np.stack([A, B, C], axis=-1)


def _signed_area(z: np.ndarray) -> float:
    a, b, c = z
    return float(((b - a).conjugate() * (c - a)).imag)


# ---------------------------------------------------------------- construction


class _Builder:
    def __init__(self) -> None:
        self.pos: list[complex] = []
        self.rec: list[Recipe] = []
        self.tris: list[tuple[int, int, int]] = []
        self.pinned: list[int] = []

    def add(self, z: complex, recipe: Recipe) -> int:
        self.pos.append(complex(z))
        self.rec.append(recipe)
        return len(self.pos) - 1

    def tri(self, a: int, b: int, c: int) -> None:
        if len({a, b, c}) < 3:
            return
        z = np.array([self.pos[a], self.pos[b], self.pos[c]])
        if _signed_area(z) < 0:
            b, c = c, b
        self.tris.append((a, b, c))

    def quad(self, a: int, b: int, c: int, d: int) -> None:
        """Cell with corners in cyclic order a, b, c, d."""
        self.tri(a, b, c)
        self.tri(a, c, d)


def build_mesh(model: FuchsianModel, resolution: float = 0.25, truncation: float = 3.0) -> Mesh:
    if resolution <= 0:
        raise MeshError("resolution must be positive")
    if truncation < 0:
        raise MeshError("truncation must be nonnegative")
    B = _Builder()
    N = model.n_sides
    c0 = B.add(0.0, Recipe(CENTER))
    strip_rows: list[list[list[int]]] = []
    if not model.ideal:
        corners = [B.add(model.vertices[k], Recipe(POLYGON_VERTEX, params=(float(k),))) for k in range(N)]
        reach = max(abs(model.vertices))
        R = 2.0 * math.atanh(reach)
        n_sub = max(2, math.ceil(R / resolution))
        k_top = _top_count(model.vertices[0], model.vertices[1], resolution)
        for k in range(N):
            _cone(B, c0, corners[k], corners[(k + 1) % N], n_sub, k_top, resolution)
        heights = np.zeros(0)
    else:
        widths = [max(cv[1] - cv[0], cv[2] - cv[1]) for c in model.cusps for cv in c.corner_v]
        M = max(1, math.ceil(max(widths) / resolution))
        rows = math.ceil(truncation / resolution) if truncation > 0 else 0
        heights = np.linspace(0.0, truncation, rows + 1)
        # per polygon vertex: (cusp, corner) and the column indices of the bottom row
        where: dict[int, tuple[int, int]] = {}
        for i, cusp in enumerate(model.cusps):
            for j, (W, _eta) in enumerate(cusp.corners):
                where[W] = (i, j)
        bottom: dict[int, dict[str, list[int]]] = {}
        for i, cusp in enumerate(model.cusps):
            rows_i: list[list[int]] = [[] for _ in heights]
            for j, (W, _eta) in enumerate(cusp.corners):
                vl, vc, vr = cusp.corner_v[j]
                cols = np.concatenate([vc + (vl - vc) * np.linspace(1.0, 0.0, M + 1), vc + (vr - vc) * np.linspace(0.0, 1.0, M + 1)[1:]])
                grid = np.empty((len(heights), len(cols)), dtype=int)
                for r, t in enumerate(heights):
                    zs = cusp.disk_point(j, cols, np.full(len(cols), t))
                    for c, (v, z) in enumerate(zip(cols, zs)):
                        grid[r, c] = B.add(z, Recipe(STRIP, params=(float(v), float(t)), cusp=i, corner=j))
                    rows_i[r].extend(grid[r].tolist())
                for r in range(len(heights) - 1):
                    for c in range(len(cols) - 1):
                        B.quad(grid[r, c], grid[r, c + 1], grid[r + 1, c + 1], grid[r + 1, c])
                B.pinned.extend(grid[-1].tolist())
                # left half runs from the center column (index M) out to v_left (index 0)
                bottom[W] = {"left": grid[0, M::-1].tolist(), "right": grid[0, M:].tolist(), "top": grid[-1].tolist()}
            strip_rows.append(rows_i)
        reach = max(abs(B.pos[bottom[W]["left"][0]]) for W in range(N))
        R = 2.0 * math.atanh(reach)
        n_sub = max(2, math.ceil(R / resolution))
        k_top = _top_count(B.pos[bottom[0]["left"][0]], B.pos[bottom[1 % N]["right"][0]], resolution)
        for k in range(N):
            a_row = bottom[k]["left"]
            b_row = bottom[(k + 1) % N]["right"]
            _cone(B, c0, a_row[0], b_row[0], n_sub, k_top, resolution)
            _band(B, a_row, b_row, k_top)
        if rows > 0 and rows * 2 * M * 2 < 3:
            raise MeshError("resolution too coarse: fewer than 3 triangles per cusp strip")
    return _finalize(model, resolution, truncation, B, strip_rows, heights)


def _top_count(za: complex, zb: complex, resolution: float) -> int:
    """Segments on the outer edge of a coned triangle, rounded so that strides can halve."""
    width = disk_distances(np.array([za]), np.array([zb]))[0]
    k = max(1, math.ceil(width / resolution))
    p = 2 ** max(0, int(math.log2(k)) - 1)
    return p * math.ceil(k / p)


def _stitch(B: _Builder, lower: list[int], upper: list[int]) -> None:
    """Triangulate between two polylines by advancing along their parameter fractions."""
    i = j = 0
    nl, nu = len(lower) - 1, len(upper) - 1
    while i < nl or j < nu:
        adv_lower = j >= nu or (i < nl and (i + 1) / max(nl, 1) <= (j + 1) / max(nu, 1))
        if adv_lower:
            B.tri(lower[i], lower[i + 1], upper[j])
            i += 1
        else:
            B.tri(lower[i], upper[j + 1], upper[j])
            j += 1


def _cone(B: _Builder, c0: int, a: int, b: int, n: int, k_top: int, resolution: float) -> None:
    """Rays from the center to k_top + 1 evenly spaced points of the edge ab, cut into n rows.

    Inner rows use every stride-th ray, with the stride halving outward, so that lateral
    spacing stays at most the resolution without crowding near the center.
    """
    zc, za, zb = B.pos[c0], B.pos[a], B.pos[b]
    tops = [disk_geodesic(za, zb, j / k_top) for j in range(k_top + 1)]
    rows: list[list[int]] = [[c0]]
    stride = k_top
    for i in range(1, n + 1):
        pts = [disk_geodesic(zc, q, i / n) for q in tops]
        while stride > 1:
            spacing = disk_distances(np.array(pts[0:1]), np.array(pts[stride : stride + 1]))[0]
            if spacing <= resolution or k_top % (stride // 2):
                break
            stride //= 2
        if i == n:
            stride = 1
        row = []
        for j in range(0, k_top + 1, stride):
            if i == n and j == 0:
                row.append(a)
            elif i == n and j == k_top:
                row.append(b)
            else:
                row.append(B.add(pts[j], Recipe(CONE, anchors=(c0, a, b), params=(i / n, j / k_top))))
        rows.append(row)
    for i in range(n):
        _stitch(B, rows[i], rows[i + 1])


def _band(B: _Builder, a_row: list[int], b_row: list[int], n: int) -> None:
    """Geodesic segments from a_row[l] to b_row[l], each cut into n pieces."""
    grid = []
    for l, (a, b) in enumerate(zip(a_row, b_row)):
        row = [a]
        for i in range(1, n):
            lam = i / n
            row.append(B.add(disk_geodesic(B.pos[a], B.pos[b], lam), Recipe(BAND, anchors=(a, b), params=(lam,))))
        row.append(b)
        grid.append(row)
    for l in range(len(grid) - 1):
        for i in range(n):
            B.quad(grid[l][i], grid[l][i + 1], grid[l + 1][i + 1], grid[l + 1][i])


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.p = list(range(n))

    def find(self, x: int) -> int:
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.p[rb] = ra
            else:
                self.p[ra] = rb


def _nearest(tree: cKDTree, pos: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Index of the mesh point within MATCH_TOL (hyperbolic) of each query point, or -1."""
    pts = np.column_stack([query.real, query.imag])
    dist, idx = tree.query(pts, k=1)
    out = np.full(len(query), -1, dtype=int)
    ok = np.isfinite(dist)
    cand = np.where(ok, idx, 0)
    h = disk_distances(query, pos[cand])
    out[ok & (h < MATCH_TOL)] = cand[ok & (h < MATCH_TOL)]
    return out


def _dist(a: complex, b: complex) -> float:
    return 2.0 * math.atanh(min(abs(a - b) / abs(1.0 - a.conjugate() * b), 1.0 - 1e-16))


def _angle_at(pos: np.ndarray, apex: int, u: int, v: int) -> float:
    zp, zu, zv = complex(pos[apex]), complex(pos[u]), complex(pos[v])
    la, lb, lc = _dist(zu, zv), _dist(zp, zv), _dist(zp, zu)
    c = (math.cosh(lb) * math.cosh(lc) - math.cosh(la)) / (math.sinh(lb) * math.sinh(lc))
    return math.acos(max(-1.0, min(1.0, c)))


def delaunay_flips(pos: np.ndarray, tris: np.ndarray, max_passes: int = 50) -> tuple[np.ndarray, int]:
    """Flip interior edges whose opposite angles sum past pi (negative cotangent weight)."""
    tris = [list(t) for t in tris]
    flips = 0
    for _ in range(max_passes):
        edge_tris: dict[tuple[int, int], list[int]] = {}
        for k, t in enumerate(tris):
            for e in range(3):
                u, v = t[e], t[(e + 1) % 3]
                edge_tris.setdefault((min(u, v), max(u, v)), []).append(k)
        changed = False
        touched: set[int] = set()
        for (u, v), ks in edge_tris.items():
            if len(ks) != 2 or ks[0] in touched or ks[1] in touched:
                continue
            t1, t2 = tris[ks[0]], tris[ks[1]]
            p = [x for x in t1 if x not in (u, v)][0]
            q = [x for x in t2 if x not in (u, v)][0]
            if _angle_at(pos, p, u, v) + _angle_at(pos, q, u, v) <= np.pi + 1e-12:
                continue
            # keep orientation: t1 = (u', v', p) in its cyclic order
            i = t1.index(p)
            a, b = t1[(i + 1) % 3], t1[(i + 2) % 3]
            n1, n2 = [p, a, q], [p, q, b]
            if _signed_area(pos[n1]) <= 0 or _signed_area(pos[n2]) <= 0:
                continue
            tris[ks[0]], tris[ks[1]] = n1, n2
            touched.update(ks)
            flips += 1
            changed = True
        if not changed:
            break
    return np.array(tris, dtype=int), flips


def _finalize(model: FuchsianModel, resolution: float, truncation: float, B: _Builder, strip_rows, heights) -> Mesh:
    raw = np.array(B.pos)
    tree = cKDTree(np.column_stack([raw.real, raw.imag]))
    uf = _UnionFind(len(raw))
    for i, z in enumerate(raw):
        for j in tree.query_ball_point([z.real, z.imag], r=1e-9 + 1e-3 * (1.0 - abs(z) ** 2)):
            if j != i and disk_distances(np.array([z]), np.array([raw[j]]))[0] < MATCH_TOL:
                uf.union(i, j)
    keep = sorted({uf.find(i) for i in range(len(raw))})
    new_id = {old: k for k, old in enumerate(keep)}
    remap = np.array([new_id[uf.find(i)] for i in range(len(raw))])
    pos = raw[keep]
    recipes = []
    for old in keep:
        r = B.rec[old]
        recipes.append(Recipe(r.kind, tuple(int(remap[a]) for a in r.anchors), r.params, r.cusp, r.corner))
    tris = np.array([[remap[a] for a in t] for t in B.tris], dtype=int)
    tris, _ = delaunay_flips(pos, tris)
    pinned = np.unique(remap[np.array(B.pinned, dtype=int)]) if B.pinned else np.zeros(0, dtype=int)
    strip_rows = [[sorted(set(remap[np.array(r, dtype=int)].tolist())) for r in rows] for rows in strip_rows]

    # orbit identification under the side pairings
    tree = cKDTree(np.column_stack([pos.real, pos.imag]))
    matches: dict[int, np.ndarray] = {}
    for j, g in enumerate(model.generators):
        for letter, h in ((j + 1, g), (-(j + 1), su11_inverse(g))):
            matches[letter] = _nearest(tree, pos, mobius(h, pos))
    n = len(pos)
    words: list[Word | None] = [None] * n
    orbit = np.full(n, -1, dtype=int)
    reps: list[int] = []
    for start in range(n):
        if orbit[start] >= 0:
            continue
        o = len(reps)
        reps.append(start)
        orbit[start] = o
        words[start] = ()
        queue = [start]
        while queue:
            u = queue.pop()
            for letter, m in matches.items():
                v = m[u]
                if v >= 0 and orbit[v] < 0:
                    orbit[v] = o
                    words[v] = word_mul((letter,), words[u])
                    queue.append(v)
    # cotangent weights and areas
    z = pos[tris]
    la = disk_distances(z[:, 1], z[:, 2])
    lb = disk_distances(z[:, 2], z[:, 0])
    lc = disk_distances(z[:, 0], z[:, 1])
    ang = triangle_angles(la, lb, lc)
    area = np.maximum(np.pi - ang.sum(axis=1), 0.0)
    cot = 0.5 / np.tan(np.clip(ang, 1e-12, np.pi - 1e-12))
    edge_w: dict[tuple[int, int], float] = {}
    for t, (a, b, c) in enumerate(tris):
        for (u, v), w in (((b, c), cot[t, 0]), ((c, a), cot[t, 1]), ((a, b), cot[t, 2])):
            key = (min(u, v), max(u, v))
            edge_w[key] = edge_w.get(key, 0.0) + w
    keys = list(edge_w)
    index = {k: i for i, k in enumerate(keys)}
    euf = _UnionFind(len(keys))
    for letter, m in matches.items():
        for (u, v), i in index.items():
            mu, mv = m[u], m[v]
            if mu >= 0 and mv >= 0:
                other = (min(mu, mv), max(mu, mv))
                if other in index:
                    euf.union(i, index[other])
    groups: dict[int, list[int]] = {}
    for i in range(len(keys)):
        groups.setdefault(euf.find(i), []).append(i)
    edges = []
    weights = []
    for root, members in sorted(groups.items()):
        u, v = keys[root]
        if orbit[u] == orbit[v]:
            raise MeshError("resolution too coarse: an edge joins a vertex orbit to itself")
        edges.append((u, v))
        weights.append(sum(edge_w[keys[i]] for i in members))
    weights = np.array(weights)
    clamped = int((weights < 0).sum())
    weights = np.maximum(weights, 0.0)
    # oriented top-row edges for cusp boundary integrals
    boundary: list[list[tuple[int, int, int]]] = [[] for _ in model.cusps]
    pin_set = set(pinned.tolist())
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            if u in pin_set and v in pin_set:
                r = recipes[u]
                boundary[r.cusp].append((int(u), int(v), r.corner))
    mesh = Mesh(
        model=model,
        resolution=resolution,
        truncation=truncation,
        positions=pos,
        recipes=recipes,
        triangles=tris,
        orbit=orbit,
        orbit_rep=np.array(reps, dtype=int),
        words=[tuple(w) for w in words],
        edges=np.array(edges, dtype=int).reshape(-1, 2),
        edge_weights=weights,
        clamped_weights=clamped,
        pinned=pinned,
        triangle_area=area,
        boundary_edges=boundary,
        strip_rows=strip_rows,
        row_heights=np.asarray(heights),
    )
    return mesh
