"""Hermitian forms of signature (n, 1) and the matrix groups preserving them.

Two conventions are supported:

* ``BALL``: gram = diag(1, ..., 1, -1).
* ``SIEGEL``: <z, w> = z_1 conj(w_{n+1}) + z_{n+1} conj(w_1) + sum_{i=2..n} z_i conj(w_i).

The Cayley transfer converts between them. Every routine is pure, and every value it
returns is a fresh array.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

FORM_TOL = 1e-10
BOUNDARY_TOL = 1e-12


class HermitianError(ValueError):
    """Raised on malformed input (the message starts with a short error tag)."""


class EigenError(RuntimeError):
    def __init__(self, message: str, residuals: list[float]):
        super().__init__(message)
        self.residuals = residuals


class Convention(str, enum.Enum):
    BALL = "ball"
    SIEGEL = "siegel"


@dataclass(frozen=True)
class HermitianForm:
    n: int
    convention: Convention = Convention.BALL

    def __post_init__(self) -> None:
        if self.n < 1:
            raise HermitianError("dimension: n must be a positive integer")

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def gram(self) -> np.ndarray:
        g = np.zeros((self.n + 1, self.n + 1), dtype=complex)
        if self.convention is Convention.BALL:
            g[np.arange(self.n), np.arange(self.n)] = 1.0
            g[self.n, self.n] = -1.0
        else:
            g[0, self.n] = 1.0
            g[self.n, 0] = 1.0
            for i in range(1, self.n):
                g[i, i] = 1.0
        return g

    @classmethod
    def ball(cls, n: int) -> "HermitianForm":
        return cls(n, Convention.BALL)

    @classmethod
    def siegel(cls, n: int) -> "HermitianForm":
        return cls(n, Convention.SIEGEL)


def _as_vec(v, form: HermitianForm) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    if a.shape[-1] != form.size:
        raise HermitianError(f"dimension: expected length {form.size}, got {a.shape[-1]}")
    return a


def form_eval(v, w, form: HermitianForm) -> complex:
    """Return <v, w> = w^* G v.  Linear in v, conjugate linear in w."""
    a = _as_vec(v, form)
    b = _as_vec(w, form)
    if a.ndim != 1 or b.ndim != 1:
        raise HermitianError("dimension: form_eval expects vectors")
    return complex(b.conj() @ form.gram @ a)


def hform(v: np.ndarray, w: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Batched <v, w> over the trailing axis."""
    return np.einsum("...i,ij,...j->...", np.conj(w), gram, v)


def normalize_max_entry(v: np.ndarray) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    k = np.argmax(np.abs(a), axis=-1)
    scale = np.take_along_axis(a, k[..., None], axis=-1) if a.ndim > 1 else a[k]
    return a / scale


@dataclass(frozen=True)
class ProjectiveLift:
    """A nonzero vector standing for the complex line it spans."""

    v: np.ndarray
    form: HermitianForm

    def __post_init__(self) -> None:
        arr = _as_vec(self.v, self.form).copy()
        if arr.ndim != 1 or not np.any(arr):
            raise HermitianError("dimension: lift must be a nonzero vector")
        arr.setflags(write=False)
        object.__setattr__(self, "v", arr)

    @property
    def norm(self) -> float:
        return form_eval(self.v, self.v, self.form).real

    def is_boundary(self, tol: float = BOUNDARY_TOL) -> bool:
        u = normalize_max_entry(self.v)
        return abs(form_eval(u, u, self.form)) <= tol

    def is_interior(self, tol: float = BOUNDARY_TOL) -> bool:
        u = normalize_max_entry(self.v)
        return form_eval(u, u, self.form).real < -tol

    def normalized(self) -> "ProjectiveLift":
        """Interior lifts are rescaled so that <v, v> = -2. Boundary lifts get unit max entry."""
        if self.is_interior():
            return ProjectiveLift(self.v * np.sqrt(2.0 / -self.norm), self.form)
        return ProjectiveLift(normalize_max_entry(self.v), self.form)

    def same_point(self, other: "ProjectiveLift", tol: float = 1e-12) -> bool:
        a = self.v / np.linalg.norm(self.v)
        b = other.v / np.linalg.norm(other.v)
        return abs(abs(np.vdot(a, b)) - 1.0) <= tol


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    form_residual: float
    det_residual: float


def validate_group(mat, form: HermitianForm, tol: float = FORM_TOL) -> ValidationReport:
    m = np.asarray(mat, dtype=complex)
    if m.shape != (form.size, form.size):
        return ValidationReport(False, float("inf"), float("inf"))
    g = form.gram
    form_res = float(np.linalg.norm(m.conj().T @ g @ m - g, 2))
    det_res = float(abs(np.linalg.det(m) - 1.0))
    return ValidationReport(form_res <= tol and det_res <= tol, form_res, det_res)


@dataclass(frozen=True)
class GroupElement:
    mat: np.ndarray
    form: HermitianForm

    def __post_init__(self) -> None:
        arr = np.array(self.mat, dtype=complex)
        if arr.shape != (self.form.size, self.form.size):
            raise HermitianError("dimension: matrix does not match form")
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)

    def validate(self, tol: float = FORM_TOL) -> ValidationReport:
        return validate_group(self.mat, self.form, tol)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.mat @ other.mat, self.form)

    def inverse(self) -> "GroupElement":
        return GroupElement(unitary_inverse(self.mat, self.form), self.form)

    def act(self, p: ProjectiveLift) -> ProjectiveLift:
        return ProjectiveLift(self.mat @ p.v, p.form)


def unitary_inverse(mat: np.ndarray, form: HermitianForm) -> np.ndarray:
    """Inverse of a form-preserving matrix: G^{-1} M^* G."""
    g = form.gram
    return np.linalg.inv(g) @ np.asarray(mat).conj().T @ g


def to_special(mat: np.ndarray) -> np.ndarray:
    """Rescale by a root of the determinant so that det = 1."""
    m = np.asarray(mat, dtype=complex)
    d = np.linalg.det(m)
    return m / d ** (1.0 / m.shape[0])


@dataclass(frozen=True)
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float
    algebraic_multiplicity: int = 1


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    pairs: list[EigenPair]
    deficient: bool
    generalized: list[np.ndarray] = field(default_factory=list)


def _null_space(a: np.ndarray, tol: float) -> np.ndarray:
    _, s, vh = np.linalg.svd(a)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def eigen_decompose(mat, cluster_tol: float | None = None) -> EigenDecomposition:
    """Eigenpairs grouped by eigenvalue clusters.

    The raw spectrum comes from LAPACK. Within a cluster believed to be a single
    eigenvalue, the value is replaced by the cluster mean. This mean is accurate even
    for Jordan blocks, because it is a partial trace. The eigenbasis is then taken
    from the numerical null space of (A - mean I). Clusters whose geometric
    multiplicity is lower than their size set ``deficient`` and contribute
    generalized eigenvectors.
    """
    a = np.asarray(mat, dtype=complex)
    size = a.shape[0]
    if a.shape != (size, size):
        raise HermitianError("dimension: square matrix expected")
    try:
        vals = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenError(f"eigen-fail: {exc}", []) from exc
    scale = max(1.0, float(np.linalg.norm(a, 2)))
    if cluster_tol is None:
        cluster_tol = 10.0 * (np.finfo(float).eps * scale) ** (1.0 / 3.0) * scale
    order = list(range(size))
    clusters: list[list[int]] = []
    for i in order:
        for c in clusters:
            if min(abs(vals[i] - vals[j]) for j in c) <= cluster_tol:
                c.append(i)
                break
        else:
            clusters.append([i])
    # merge chains that became close
    merged = True
    while merged:
        merged = False
        for x in range(len(clusters)):
            for y in range(x + 1, len(clusters)):
                if min(abs(vals[i] - vals[j]) for i in clusters[x] for j in clusters[y]) <= cluster_tol:
                    clusters[x] += clusters.pop(y)
                    merged = True
                    break
            if merged:
                break
    pairs: list[EigenPair] = []
    generalized: list[np.ndarray] = []
    deficient = False
    residuals: list[float] = []
    eye = np.eye(size)
    null_tol = 1e-7 * scale
    for c in clusters:
        lam = complex(np.mean(vals[c]))
        shifted = a - lam * eye
        basis = _null_space(shifted, null_tol)
        if basis.shape[1] == 0:
            # fall back on the single smallest singular direction
            _, _, vh = np.linalg.svd(shifted)
            basis = vh[-1:].conj().T
        for k in range(basis.shape[1]):
            x = basis[:, k] / np.linalg.norm(basis[:, k])
            res = float(np.linalg.norm(a @ x - lam * x))
            residuals.append(res)
            pairs.append(EigenPair(lam, x, res, len(c)))
        if basis.shape[1] < len(c):
            deficient = True
            power = np.linalg.matrix_power(shifted, len(c))
            gbasis = _null_space(power, null_tol * scale ** (len(c) - 1))
            for k in range(gbasis.shape[1]):
                generalized.append(gbasis[:, k] / np.linalg.norm(gbasis[:, k]))
    if residuals and max(residuals) > 1e-9 * scale:
        raise EigenError("eigen-fail: residuals above tolerance", residuals)
    return EigenDecomposition(vals, pairs, deficient, generalized)


def cayley_matrix(n: int) -> np.ndarray:
    """Matrix taking Ball-form coordinates to Siegel-form coordinates."""
    c = np.eye(n + 1, dtype=complex)
    r = 1.0 / np.sqrt(2.0)
    c[0, 0], c[0, n], c[n, 0], c[n, n] = r, -r, r, r
    return c


def cayley_transfer(form_from: HermitianForm, form_to: HermitianForm) -> np.ndarray:
    """Change-of-basis C with C^* gram_to C = gram_from."""
    if form_from.n != form_to.n:
        raise HermitianError("dimension: forms differ in n")
    n = form_from.n
    if form_from.convention is form_to.convention:
        return np.eye(n + 1, dtype=complex)
    c = cayley_matrix(n)
    if form_from.convention is Convention.BALL:
        return c
    return np.linalg.inv(c)


def transfer_lift(p: ProjectiveLift, target: HermitianForm) -> ProjectiveLift:
    return ProjectiveLift(cayley_transfer(p.form, target) @ p.v, target)


def transfer_matrix(mat: np.ndarray, form_from: HermitianForm, form_to: HermitianForm) -> np.ndarray:
    c = cayley_transfer(form_from, form_to)
    return c @ np.asarray(mat, dtype=complex) @ np.linalg.inv(c)


def embed_block(mat2: np.ndarray, n: int) -> np.ndarray:
    """Embed a Ball-form 2x2 matrix into the first/last coordinates of SU(n, 1)."""
    out = np.eye(n + 1, dtype=complex)
    m = np.asarray(mat2, dtype=complex)
    out[0, 0], out[0, n], out[n, 0], out[n, n] = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    return out
