"""Charts of complex hyperbolic space and the Kähler geometry attached to them.

The three charts are:

* ``BallPoint(z)``: ``z`` in the unit ball of C^n. The lift is ``(z, 1)`` in the Ball form.
* ``SiegelPoint(z, w)``: ``z`` in C^{n-1} and ``w`` in C. The lift is ``(-w, z, 1)`` in the Siegel form.
* ``HorosphericalPoint(z, v, t)``: determined by ``u + iv = 2 conj(w) - |z|^2`` with ``u = e^t``.

Real tangent vectors are flat arrays in chart coordinates:

* ball: ``(Re z_1, Im z_1, ..., Re z_n, Im z_n)``
* Siegel: ``(Re z_1, Im z_1, ..., Re w, Im w)``
* horospherical: ``(Re z_1, Im z_1, ..., v, t)``

The metric has holomorphic sectional curvature -1, and ``omega(X, Y) = g(JX, Y)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .hermitian_core import (
    Convention,
    HermitianError,
    HermitianForm,
    ProjectiveLift,
    cayley_matrix,
    hform,
)


class BoundaryPointError(HermitianError):
    pass


class Model(str, enum.Enum):
    BALL = "ball"
    SIEGEL = "siegel"
    HOROSPHERICAL = "horospherical"


@dataclass(frozen=True)
class BallPoint:
    z: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=complex)).copy())

    @property
    def n(self) -> int:
        return self.z.shape[0]

    model = Model.BALL


@dataclass(frozen=True)
class SiegelPoint:
    z: np.ndarray
    w: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=complex)).reshape(-1).copy())
        object.__setattr__(self, "w", complex(self.w))

    @property
    def n(self) -> int:
        return self.z.shape[0] + 1

    model = Model.SIEGEL


@dataclass(frozen=True)
class HorosphericalPoint:
    z: np.ndarray
    v: float
    t: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=complex)).reshape(-1).copy())
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.z.shape[0] + 1

    model = Model.HOROSPHERICAL


Point = BallPoint | SiegelPoint | HorosphericalPoint


@dataclass(frozen=True)
class MetricChart:
    model: Model
    n: int


def chart_of(p: Point) -> MetricChart:
    return MetricChart(p.model, p.n)


# ---------------------------------------------------------------- heights and conversions


def height(p: SiegelPoint) -> float:
    return 2.0 * p.w.real - float(np.vdot(p.z, p.z).real)


def lift(p: Point) -> ProjectiveLift:
    """Homogeneous lift. Ball points use the Ball form. The other charts use the Siegel form."""
    if isinstance(p, BallPoint):
        return ProjectiveLift(np.concatenate([p.z, [1.0]]), HermitianForm.ball(p.n))
    if isinstance(p, HorosphericalPoint):
        p = _horo_to_siegel(p)
    return ProjectiveLift(np.concatenate([[-p.w], p.z, [1.0]]), HermitianForm.siegel(p.n))


def _horo_to_siegel(p: HorosphericalPoint) -> SiegelPoint:
    zz = float(np.vdot(p.z, p.z).real)
    return SiegelPoint(p.z, 0.5 * (np.exp(p.t) - 1j * p.v + zz))


def _siegel_to_horo(p: SiegelPoint) -> HorosphericalPoint:
    h = height(p)
    if h <= 0:
        raise BoundaryPointError("boundary-point: height must be positive")
    return HorosphericalPoint(p.z, -2.0 * p.w.imag, np.log(h))


def point_from_lift(v: ProjectiveLift, model: Model) -> Point:
    """Dehomogenize a lift into the requested chart."""
    if not v.is_interior():
        raise BoundaryPointError("boundary-point: lift is not interior")
    n = v.form.n
    if model is Model.BALL:
        x = v.v if v.form.convention is Convention.BALL else np.linalg.solve(cayley_matrix(n), v.v)
        return BallPoint(x[:n] / x[n])
    x = v.v if v.form.convention is Convention.SIEGEL else cayley_matrix(n) @ v.v
    sp = SiegelPoint(x[1:n] / x[n], -x[0] / x[n])
    return sp if model is Model.SIEGEL else _siegel_to_horo(sp)


def _check_interior(p: Point) -> None:
    if isinstance(p, BallPoint):
        if float(np.vdot(p.z, p.z).real) >= 1.0:
            raise BoundaryPointError("boundary-point: |z| >= 1")
    elif isinstance(p, SiegelPoint) and height(p) <= 0:
        raise BoundaryPointError("boundary-point: height must be positive")


def convert(p: Point, target: Model) -> Point:
    _check_interior(p)
    if p.model is target:
        return p
    if isinstance(p, SiegelPoint) and target is Model.HOROSPHERICAL:
        return _siegel_to_horo(p)
    if isinstance(p, HorosphericalPoint) and target is Model.SIEGEL:
        return _horo_to_siegel(p)
    return point_from_lift(lift(p), target)


# ---------------------------------------------------------------- tangent vectors


def _complex_pairs(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[0::2] + 1j * x[1::2]


def _real_pairs(c: np.ndarray) -> np.ndarray:
    out = np.empty(2 * c.shape[0])
    out[0::2] = c.real
    out[1::2] = c.imag
    return out


def _horo_tangent_to_siegel(p: HorosphericalPoint, x: np.ndarray) -> tuple[np.ndarray, complex]:
    m = p.z.shape[0]
    dz = _complex_pairs(x[: 2 * m])
    dv, dt = float(x[2 * m]), float(x[2 * m + 1])
    dw = 0.5 * (np.exp(p.t) * dt - 1j * dv) + float(np.vdot(p.z, dz).real)
    return dz, complex(dw)


def _siegel_tangent_to_horo(p: HorosphericalPoint, dz: np.ndarray, dw: complex) -> np.ndarray:
    dt = np.exp(-p.t) * 2.0 * (dw.real - float(np.vdot(p.z, dz).real))
    dv = -2.0 * dw.imag
    return np.concatenate([_real_pairs(dz), [dv, dt]])


def lift_derivative(p: Point, x) -> np.ndarray:
    """Derivative of the lift along a real chart tangent vector."""
    x = np.asarray(x, dtype=float)
    if isinstance(p, BallPoint):
        return np.concatenate([_complex_pairs(x), [0.0]])
    if isinstance(p, SiegelPoint):
        c = _complex_pairs(x)
        dz, dw = c[:-1], c[-1]
    else:
        dz, dw = _horo_tangent_to_siegel(p, x)
    return np.concatenate([[-dw], dz, [0.0]])


def apply_J(p: Point, x) -> np.ndarray:
    """Complex structure in chart coordinates."""
    x = np.asarray(x, dtype=float)
    if isinstance(p, (BallPoint, SiegelPoint)):
        return _real_pairs(1j * _complex_pairs(x))
    dz, dw = _horo_tangent_to_siegel(p, x)
    return _siegel_tangent_to_horo(p, 1j * dz, 1j * dw)


def J_matrix(p: Point) -> np.ndarray:
    d = 2 * p.n
    return np.column_stack([apply_J(p, e) for e in np.eye(d)])


# ---------------------------------------------------------------- metric


def hermitian_metric(p: Point, x, y) -> complex:
    """h(X, Y), complex linear in X. Its real part is g and minus its imaginary part is omega."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(p, BallPoint):
        a, b, z = _complex_pairs(x), _complex_pairs(y), p.z
        s = 1.0 - float(np.vdot(z, z).real)
        return complex(4.0 * (s * np.vdot(b, a) + np.vdot(z, a) * np.vdot(b, z)) / s**2)
    if isinstance(p, HorosphericalPoint):
        sp = _horo_to_siegel(p)
        ax, aw = _horo_tangent_to_siegel(p, x)
        bx, bw = _horo_tangent_to_siegel(p, y)
    else:
        sp = p
        ca, cb = _complex_pairs(x), _complex_pairs(y)
        ax, aw, bx, bw = ca[:-1], ca[-1], cb[:-1], cb[-1]
    h = height(sp)
    z = sp.z
    ua = aw - np.vdot(z, ax)
    ub = bw - np.vdot(z, bx)
    return complex(4.0 / h**2 * (ua * np.conj(ub) + h * np.vdot(bx, ax)))


def metric_eval(chart: MetricChart, p: Point, x, y) -> float:
    """Riemannian metric in closed form for each chart."""
    if chart.model is not p.model:
        raise HermitianError("dimension: point does not belong to chart")
    if isinstance(p, HorosphericalPoint):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        m = p.z.shape[0]
        bx, by = beta_form(p, x), beta_form(p, y)
        dzx, dzy = _complex_pairs(x[: 2 * m]), _complex_pairs(y[: 2 * m])
        return float(
            x[2 * m + 1] * y[2 * m + 1]
            + np.exp(-2 * p.t) * bx * by
            + 4.0 * np.exp(-p.t) * np.vdot(dzy, dzx).real
        )
    return hermitian_metric(p, x, y).real


def metric_matrix(p: Point) -> np.ndarray:
    d = 2 * p.n
    e = np.eye(d)
    ch = chart_of(p)
    return np.array([[metric_eval(ch, p, e[i], e[j]) for j in range(d)] for i in range(d)])


def kahler_form(chart: MetricChart, p: Point, x, y) -> float:
    return metric_eval(chart, p, apply_J(p, x), y)


def beta_form(p: HorosphericalPoint, x) -> float:
    x = np.asarray(x, dtype=float)
    m = p.z.shape[0]
    dz = _complex_pairs(x[: 2 * m])
    return float(-x[2 * m] + 2.0 * np.vdot(dz, p.z).imag)


def dc_identity_check(p: HorosphericalPoint) -> float:
    """max |(-dt o J - e^{-t} beta)(X_i)| over the coordinate frame."""
    d = 2 * p.n
    res = 0.0
    for e in np.eye(d):
        jdt = -apply_J(p, e)[-1]
        res = max(res, abs(jdt - np.exp(-p.t) * beta_form(p, e)))
    return res


# ---------------------------------------------------------------- lift-space geometry


def lift_hermitian(P: np.ndarray, X: np.ndarray, Y: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Batched h(X, Y) for lift derivatives X, Y at the lift P."""
    pp = hform(P, P, gram).real
    return -4.0 * (hform(X, Y, gram) * pp - hform(X, P, gram) * hform(P, Y, gram)) / pp**2


def lift_omega(P: np.ndarray, X: np.ndarray, Y: np.ndarray, gram: np.ndarray) -> np.ndarray:
    return -lift_hermitian(P, X, Y, gram).imag


def _interior_lift(p) -> ProjectiveLift:
    v = p if isinstance(p, ProjectiveLift) else lift(p)
    if not v.is_interior():
        raise BoundaryPointError("boundary-point: distance needs interior points")
    return v


def distance_lifts(P: np.ndarray, Q: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Batched distance. sinh^2(d/2) = -<Q_perp, Q_perp> / <Q, Q>, where Q_perp is Q orthogonal to P."""
    pp = hform(P, P, gram).real
    qq = hform(Q, Q, gram).real
    c = hform(Q, P, gram) / pp
    qperp = Q - c[..., None] * P
    ratio = np.maximum(hform(qperp, qperp, gram).real / -qq, 0.0)
    return 2.0 * np.arcsinh(np.sqrt(ratio))


def distance(p, q) -> float:
    """Distance between interior points, given as lifts or chart points."""
    a, b = _interior_lift(p), _interior_lift(q)
    if a.form != b.form:
        from .hermitian_core import transfer_lift

        b = transfer_lift(b, a.form)
    return float(distance_lifts(a.v, b.v, a.form.gram))


def hyperboloid(P: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Rescale lifts to <P, P> = -1."""
    pp = hform(P, P, gram).real
    return P / np.sqrt(-pp)[..., None]


def align(P: np.ndarray, Q: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Rotate the phase of Q so that <P, Q> is real and negative."""
    ip = hform(P, Q, gram)
    ab = np.abs(ip)
    c = np.where(ab > 0, -ip / np.where(ab > 0, ab, 1.0), 1.0)
    return Q * c[..., None]


def geodesic_lifts(P: np.ndarray, Q: np.ndarray, s, gram: np.ndarray) -> np.ndarray:
    """Batched constant-speed geodesic on the hyperboloid <X, X> = -1."""
    P = hyperboloid(P, gram)
    Q = align(P, hyperboloid(Q, gram), gram)
    rho = np.arccosh(np.maximum(-hform(P, Q, gram).real, 1.0))
    s = np.asarray(s, dtype=float)
    small = rho < 1e-300
    sr = np.where(small, 1.0, np.sinh(rho))
    a = np.where(small, 1.0 - s, np.sinh((1.0 - s) * rho) / sr)
    b = np.where(small, s, np.sinh(s * rho) / sr)
    return a[..., None] * P + b[..., None] * Q


def geodesic(p, q, s: float):
    """Point at affine parameter s on the geodesic from p to q, in the chart (or lift form) of p."""
    a, b = _interior_lift(p), _interior_lift(q)
    if a.form != b.form:
        from .hermitian_core import transfer_lift

        b = transfer_lift(b, a.form)
    v = ProjectiveLift(geodesic_lifts(a.v, b.v, s, a.form.gram), a.form)
    if isinstance(p, ProjectiveLift):
        return v
    return point_from_lift(v, p.model)


def geodesic_length_oracle(p, q, nodes: int = 48) -> float:
    """Length of the geodesic arc from integrating the ball-chart metric along it.

    The curve is pushed into ball coordinates. Its velocity comes from the analytic
    derivative of the hyperboloid arc, and the speed comes from ``metric_eval``.
    """
    a, b = _interior_lift(p), _interior_lift(q)
    n = a.form.n
    ball = HermitianForm.ball(n)
    C = np.linalg.inv(cayley_matrix(n))
    P = a.v if a.form.convention is Convention.BALL else C @ a.v
    Q = b.v if b.form.convention is Convention.BALL else C @ b.v
    g = ball.gram
    P = hyperboloid(P, g)
    Q = align(P, hyperboloid(Q, g), g)
    rho = float(np.arccosh(max(-hform(P, Q, g).real, 1.0)))
    if rho == 0.0:
        return 0.0
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    s_nodes = 0.5 * (xs + 1.0)
    chart = MetricChart(Model.BALL, n)
    total = 0.0
    for s, w in zip(s_nodes, ws):
        X = (np.sinh((1 - s) * rho) * P + np.sinh(s * rho) * Q) / np.sinh(rho)
        dX = rho * (-np.cosh((1 - s) * rho) * P + np.cosh(s * rho) * Q) / np.sinh(rho)
        z = X[:n] / X[n]
        dz = (dX[:n] * X[n] - X[:n] * dX[n]) / X[n] ** 2
        bp = BallPoint(z)
        xr = _real_pairs(dz)
        total += 0.5 * w * np.sqrt(metric_eval(chart, bp, xr, xr))
    return float(total)


# ---------------------------------------------------------------- potentials


class PotentialKind(str, enum.Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"


@dataclass(frozen=True)
class KahlerPotential:
    """A Kähler potential attached to a fixed point.

    ``ELLIPTIC`` uses an interior center ``p``, with psi = log(<X,X><p,p> / |<X,p>|^2).
    ``PARABOLIC`` uses a null vector ``xi``, with psi = log(-<X,X> / |<X,xi>|^2).
    Both satisfy d(-d^c psi) = omega.
    """

    kind: PotentialKind
    anchor: ProjectiveLift

    def __post_init__(self) -> None:
        if self.kind is PotentialKind.ELLIPTIC and not self.anchor.is_interior():
            raise HermitianError("elliptic potential needs an interior center")
        if self.kind is PotentialKind.PARABOLIC and not self.anchor.is_boundary(1e-9):
            raise HermitianError("parabolic potential needs a null anchor")

    @classmethod
    def elliptic_at_origin(cls, n: int) -> "KahlerPotential":
        e = np.zeros(n + 1, dtype=complex)
        e[n] = 1.0
        return cls(PotentialKind.ELLIPTIC, ProjectiveLift(e, HermitianForm.ball(n)))

    @classmethod
    def parabolic_at_infinity(cls, n: int) -> "KahlerPotential":
        e = np.zeros(n + 1, dtype=complex)
        e[0] = 1.0
        return cls(PotentialKind.PARABOLIC, ProjectiveLift(e, HermitianForm.siegel(n)))

    @property
    def form(self) -> HermitianForm:
        return self.anchor.form


def _as_lift_of(pot: KahlerPotential, p) -> np.ndarray:
    v = p if isinstance(p, ProjectiveLift) else lift(p)
    if not v.is_interior():
        raise BoundaryPointError("boundary-point: potential needs an interior point")
    if v.form != pot.form:
        from .hermitian_core import transfer_lift

        v = transfer_lift(v, pot.form)
    return v.v


def potential_lifts(pot: KahlerPotential, X: np.ndarray) -> np.ndarray:
    g = pot.form.gram
    a = pot.anchor.v
    xx = hform(X, X, g).real
    xa = np.abs(hform(X, np.broadcast_to(a, X.shape), g)) ** 2
    if pot.kind is PotentialKind.PARABOLIC:
        return np.log(-xx / xa)
    return np.log(xx * hform(a, a, g).real / xa)


def varsigma_lifts(pot: KahlerPotential, X: np.ndarray, dX: np.ndarray) -> np.ndarray:
    """Batched varsigma(dX) = d psi(i dX), differentiated by hand."""
    g = pot.form.gram
    a = np.broadcast_to(pot.anchor.v, X.shape)
    return -2.0 * (hform(dX, X, g) / hform(X, X, g).real).imag + 2.0 * (hform(dX, a, g) / hform(X, a, g)).imag


def potential_eval(pot: KahlerPotential, p) -> float:
    return float(potential_lifts(pot, _as_lift_of(pot, p)))


def varsigma_eval(pot: KahlerPotential, p: Point, x) -> float:
    X = lift(p)
    dX = lift_derivative(p, x)
    if X.form != pot.form:
        from .hermitian_core import cayley_transfer

        c = cayley_transfer(X.form, pot.form)
        Xv, dX = c @ X.v, c @ dX
    else:
        Xv = X.v
    if not ProjectiveLift(Xv, pot.form).is_interior():
        raise BoundaryPointError("boundary-point: potential needs an interior point")
    return float(varsigma_lifts(pot, Xv, dX))


# ---------------------------------------------------------------- chart perturbation helpers


def perturb(p: Point, x) -> Point:
    """Move p by the real coordinate vector x inside its chart."""
    x = np.asarray(x, dtype=float)
    if isinstance(p, BallPoint):
        return BallPoint(p.z + _complex_pairs(x))
    if isinstance(p, SiegelPoint):
        c = _complex_pairs(x)
        return SiegelPoint(p.z + c[:-1], p.w + c[-1])
    m = p.z.shape[0]
    return HorosphericalPoint(p.z + _complex_pairs(x[: 2 * m]), p.v + x[2 * m], p.t + x[2 * m + 1])


def chart_coordinates(p: Point) -> np.ndarray:
    if isinstance(p, BallPoint):
        return _real_pairs(p.z)
    if isinstance(p, SiegelPoint):
        return _real_pairs(np.concatenate([p.z, [p.w]]))
    return np.concatenate([_real_pairs(p.z), [p.v, p.t]])


def point_to_json(p: Point) -> dict:
    return {"model": p.model.value, "coords": chart_coordinates(p).tolist(), "n": p.n}


def point_from_json(d: dict) -> Point:
    model = Model(d["model"])
    x = np.asarray(d["coords"], dtype=float)
    if model is Model.BALL:
        return BallPoint(_complex_pairs(x))
    if model is Model.SIEGEL:
        c = _complex_pairs(x)
        return SiegelPoint(c[:-1], c[-1])
    m = (len(x) - 2) // 2
    return HorosphericalPoint(_complex_pairs(x[: 2 * m]), x[2 * m], x[2 * m + 1])
