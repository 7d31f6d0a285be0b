"""Isometries of complex hyperbolic space: classification, axes and cusp stabilizers.

Heisenberg coordinates use the Hermitian pairing <<a, b>> = sum a_i conj(b_i) on C^{m-1}.
The product is (xi1 + xi2, nu1 + nu2 + 2 Im <<xi1, xi2>>). Left multiplication by
(xi, nu) moves a horospherical point (z, v, t) to (z + xi, v + nu + 2 Im <<xi, z>>, t).
This action preserves the contact form -dv + 2 Im <<z, dz>>.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .chs_models import HorosphericalPoint, Model, distance_lifts, lift, point_from_lift
from .hermitian_core import (
    HermitianError,
    HermitianForm,
    ProjectiveLift,
    cayley_transfer,
    eigen_decompose,
    hform,
    normalize_max_entry,
    validate_group,
)

HYPERBOLIC_BAND = 1e-8
NULL_TOL = 1e-10


class WrongTypeError(HermitianError):
    pass


class IsometryType(str, enum.Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class IsometryClass:
    matrix: np.ndarray
    form: HermitianForm
    type: IsometryType
    fixed_points: list[np.ndarray]
    length: float | None = None
    spectral_length: float | None = None
    eigenvalues: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def attracting(self) -> np.ndarray:
        return self.fixed_points[0]

    @property
    def repelling(self) -> np.ndarray:
        return self.fixed_points[1]

    def axis_point(self, tau: float) -> np.ndarray:
        """Unit-speed point on the axis, moving toward the attracting end as tau grows."""
        if self.type is not IsometryType.HYPERBOLIC:
            raise WrongTypeError("wrong-type: axis needs a hyperbolic isometry")
        a, r = _paired_axis(self.attracting, self.repelling, self.form.gram)
        return np.exp(tau / 2) * a + np.exp(-tau / 2) * r

    def to_json(self) -> dict:
        from .serialization import matrix_to_json, vector_to_json

        out = {
            "matrix": matrix_to_json(self.matrix),
            "form": self.form.convention.value,
            "type": self.type.value,
            "fixed_points": [vector_to_json(v) for v in self.fixed_points],
            "warnings": list(self.warnings),
        }
        if self.length is not None:
            out["length"] = self.length
            out["spectral_length"] = self.spectral_length
        return out


def _paired_axis(a: np.ndarray, r: np.ndarray, gram: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale the repelling vector so that <a, r> = -1."""
    ip = hform(a, r, gram)
    return a, r * (-1.0 / np.conj(ip))


def _eigenspace_form(basis: list[np.ndarray], gram: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    V = np.column_stack(basis)
    H = V.conj().T @ gram @ V
    w, U = np.linalg.eigh(0.5 * (H + H.conj().T))
    return w, V @ U


def classify(mat, form: HermitianForm, check: bool = True) -> IsometryClass:
    m = np.asarray(mat, dtype=complex)
    if check:
        rep = validate_group(m, form, 1e-8)
        if not rep.ok:
            raise HermitianError(
                f"not-in-group: form residual {rep.form_residual:.2e}, det residual {rep.det_residual:.2e}"
            )
    g = form.gram
    dec = eigen_decompose(m)
    warnings: list[str] = []
    mods = np.array([abs(p.value) for p in dec.pairs])
    kmax = int(np.argmax(mods))
    top = mods[kmax]
    if abs(top - 1.0) <= 1e-6 and abs(top - 1.0) > 1e-12:
        warnings.append("near-degenerate")
    if top > 1.0 + HYPERBOLIC_BAND:
        kmin = int(np.argmin(mods))
        a = normalize_max_entry(dec.pairs[kmax].vector)
        r = normalize_max_entry(dec.pairs[kmin].vector)
        for v in (a, r):
            if abs(hform(v, v, g)) > 1e-8:
                warnings.append("axis-endpoint-not-null")
        spectral = float(2.0 * np.log(top))
        a, r = _paired_axis(a, r, g)
        p0 = a + r
        disp = float(distance_lifts(p0, m @ p0, g))
        if abs(disp - spectral) > 1e-8 * max(1.0, spectral):
            warnings.append("spectral-length-mismatch")
        return IsometryClass(m, form, IsometryType.HYPERBOLIC, [a, r], disp, spectral, dec.values, warnings)
    # group eigenvectors by eigenvalue and look for negative or null directions
    by_value: dict[complex, list[np.ndarray]] = {}
    for p in dec.pairs:
        by_value.setdefault(p.value, []).append(p.vector)
    best_neg = None
    best_null = None
    for basis in by_value.values():
        w, U = _eigenspace_form(basis, g)
        k = int(np.argmin(w))
        if w[k] < -1e-8:
            if best_neg is None or w[k] < best_neg[0]:
                best_neg = (w[k], U[:, k])
        for j in range(len(w)):
            u = normalize_max_entry(U[:, j])
            val = abs(hform(u, u, g))
            if best_null is None or val < best_null[0]:
                best_null = (val, u)
    if best_neg is not None:
        v = best_neg[1]
        v = v * np.sqrt(2.0 / -hform(v, v, g).real)
        return IsometryClass(m, form, IsometryType.ELLIPTIC, [v], eigenvalues=dec.values, warnings=warnings)
    if best_null is None or best_null[0] > 1e-6:
        warnings.append("null-eigenvector-inaccurate")
    return IsometryClass(m, form, IsometryType.PARABOLIC, [best_null[1]], eigenvalues=dec.values, warnings=warnings)


def translation_length(cls: IsometryClass, samples: int = 9) -> float:
    """Minimal displacement over points of the axis."""
    if cls.type is not IsometryType.HYPERBOLIC:
        raise WrongTypeError("wrong-type: translation length needs a hyperbolic isometry")
    g = cls.form.gram
    taus = np.linspace(-2.0, 2.0, samples)
    pts = np.array([cls.axis_point(t) for t in taus])
    imgs = pts @ cls.matrix.T
    return float(np.min(distance_lifts(pts, imgs, g)))


# ---------------------------------------------------------------- Heisenberg group


def hpair(a: np.ndarray, b: np.ndarray) -> complex:
    """<<a, b>> = sum a_i conj(b_i)."""
    return complex(np.vdot(b, a))


@dataclass(frozen=True)
class HeisenbergElement:
    xi: np.ndarray
    nu: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=complex)).reshape(-1).copy())
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def m(self) -> int:
        return self.xi.shape[0] + 1

    @classmethod
    def identity(cls, m: int) -> "HeisenbergElement":
        return cls(np.zeros(m - 1, dtype=complex), 0.0)

    def inverse(self) -> "HeisenbergElement":
        return HeisenbergElement(-self.xi, -self.nu)

    def __mul__(self, other: "HeisenbergElement") -> "HeisenbergElement":
        return heisenberg_mul(self, other)


def heisenberg_mul(a: HeisenbergElement, b: HeisenbergElement) -> HeisenbergElement:
    if a.m != b.m:
        raise HermitianError("dimension: Heisenberg elements differ in m")
    return HeisenbergElement(a.xi + b.xi, a.nu + b.nu + 2.0 * hpair(a.xi, b.xi).imag)


def heisenberg_commutator(a: HeisenbergElement, b: HeisenbergElement) -> HeisenbergElement:
    """a b a^{-1} b^{-1}, evaluated with the group law. It equals (0, 4 Im <<xi_a, xi_b>>)."""
    c = heisenberg_mul(heisenberg_mul(heisenberg_mul(a, b), a.inverse()), b.inverse())
    return HeisenbergElement(np.zeros_like(c.xi), c.nu)


@dataclass(frozen=True)
class StabilizerElement:
    """Composite z -> A e^{-s} z + xi fixing the point at infinity of the Siegel domain."""

    heis: HeisenbergElement
    A: np.ndarray
    s: float = 0.0

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.A, dtype=complex)).copy()
        k = self.heis.m - 1
        if a.size == 0 and k == 0:
            a = np.zeros((0, 0), dtype=complex)
        if a.shape != (k, k):
            raise HermitianError("dimension: unitary block must be (m-1) x (m-1)")
        if k and np.abs(a.conj().T @ a - np.eye(k)).max() > 1e-10:
            raise HermitianError("unitary block is not unitary")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "s", float(self.s))

    @property
    def m(self) -> int:
        return self.heis.m

    @classmethod
    def identity(cls, m: int) -> "StabilizerElement":
        return cls(HeisenbergElement.identity(m), np.eye(m - 1), 0.0)

    def compose(self, other: "StabilizerElement") -> "StabilizerElement":
        """self o other, using the semidirect product structure."""
        shifted = HeisenbergElement(np.exp(-self.s) * (self.A @ other.heis.xi), np.exp(-2 * self.s) * other.heis.nu)
        return StabilizerElement(heisenberg_mul(self.heis, shifted), self.A @ other.A, self.s + other.s)

    def __matmul__(self, other: "StabilizerElement") -> "StabilizerElement":
        return self.compose(other)

    def inverse(self) -> "StabilizerElement":
        ainv = self.A.conj().T
        # solve self o x = identity
        xi = -np.exp(self.s) * (ainv @ self.heis.xi)
        nu = -np.exp(2 * self.s) * self.heis.nu
        return StabilizerElement(HeisenbergElement(xi, nu), ainv, -self.s)


def heisenberg_matrix(h: HeisenbergElement) -> np.ndarray:
    m = h.m
    M = np.eye(m + 1, dtype=complex)
    xi = h.xi
    M[0, 1:m] = -np.conj(xi)
    M[0, m] = -(np.vdot(xi, xi).real - 1j * h.nu) / 2.0
    M[1:m, m] = xi
    return M


def to_matrix(elem: StabilizerElement | HeisenbergElement, form: HermitianForm | None = None) -> np.ndarray:
    """Matrix in SU(m, 1), Siegel form unless another form is requested."""
    if isinstance(elem, HeisenbergElement):
        elem = StabilizerElement(elem, np.eye(elem.m - 1), 0.0)
    m = elem.m
    H = heisenberg_matrix(elem.heis)
    U = np.eye(m + 1, dtype=complex)
    U[1:m, 1:m] = elem.A
    if m > 1:
        U = U * np.linalg.det(elem.A) ** (-1.0 / (m + 1))
    F = np.diag(np.concatenate([[np.exp(-elem.s)], np.ones(m - 1), [np.exp(elem.s)]])).astype(complex)
    M = H @ U @ F
    siegel = HermitianForm.siegel(m)
    if form is None or form == siegel:
        return M
    C = cayley_transfer(siegel, form)
    return C @ M @ np.linalg.inv(C)


def stabilizer_action(elem: StabilizerElement, p: HorosphericalPoint) -> HorosphericalPoint:
    az = np.exp(-elem.s) * (elem.A @ p.z)
    xi, nu = elem.heis.xi, elem.heis.nu
    return HorosphericalPoint(
        az + xi,
        np.exp(-2 * elem.s) * p.v + nu + 2.0 * hpair(xi, az).imag,
        p.t - 2.0 * elem.s,
    )


def matrix_action(mat: np.ndarray, p: HorosphericalPoint) -> HorosphericalPoint:
    v = lift(p)
    return point_from_lift(ProjectiveLift(np.asarray(mat) @ v.v, v.form), Model.HOROSPHERICAL)


def fixes_infinity(mat: np.ndarray, tol: float = 1e-10) -> bool:
    e = np.zeros(mat.shape[0], dtype=complex)
    e[0] = 1.0
    img = np.asarray(mat) @ e
    return float(np.linalg.norm(img[1:]) / np.linalg.norm(img)) <= tol


# ---------------------------------------------------------------- cusp rotations

ALLOWED_ROOTS = {
    "1": 1.0 + 0j,
    "-1": -1.0 + 0j,
    "exp(2pi i/3)": np.exp(2j * np.pi / 3),
    "i": 1j,
    "exp(pi i/3)": np.exp(1j * np.pi / 3),
}


@dataclass(frozen=True)
class RotationVerdict:
    valid: bool
    reason: str
    root: str | None = None


def cusp_rotation_check(root: complex, lattice_gens: tuple[complex, complex], tol: float = 1e-9) -> RotationVerdict:
    """Check whether multiplication by ``root`` can act on the lattice spanned by the generators."""
    w1, w2 = complex(lattice_gens[0]), complex(lattice_gens[1])
    basis = np.array([[w1.real, w2.real], [w1.imag, w2.imag]])
    if abs(np.linalg.det(basis)) <= tol * max(1.0, abs(w1) * abs(w2)):
        raise HermitianError("degenerate-lattice: generators are R-linearly dependent")
    name = next((k for k, v in ALLOWED_ROOTS.items() if abs(complex(root) - v) <= tol), None)
    if name is None:
        return RotationVerdict(False, "rotation is not one of 1, -1, exp(2pi i/3), i, exp(pi i/3)")
    for w in (w1, w2):
        img = complex(root) * w
        coeffs = np.linalg.solve(basis, [img.real, img.imag])
        if np.abs(coeffs - np.round(coeffs)).max() > 1e-8:
            shape = "square" if name == "i" else "equilateral" if name.startswith("exp") else "any"
            return RotationVerdict(False, f"lattice is not invariant under the rotation (needs a {shape} lattice)", name)
    return RotationVerdict(True, "lattice invariant under the rotation", name)
