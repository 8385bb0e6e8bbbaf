"""Nonlinear geodesic shooting on surfaces of revolution.

Geodesics are integrated in two ways:

* in ambient coordinates, for the implicit surface F(x) = 0, with
  x'' = -(x'^T H_F x') / |grad F|^2 grad F.  This form has no coordinate
  singularity on the rotation axis, which both the sphere pole and the
  paraboloid vertex lie on;
* in the (u, theta) chart with Christoffel symbols from the profile, for
  curves that stay off the axis.

Curves are parametrized by arc length.  A bifurcation witness is a
perturbed geodesic from the same initial point that crosses back through
the trace of a meridian base geodesic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

log = logging.getLogger(__name__)

ENERGY_TOL = 1e-7
WITNESS_TOL = 1e-8
MIN_STEPS = 512


class ShootingError(ValueError):
    pass


Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SurfaceOfRevolution:
    """Profile (r(u), z(u)) rotated about the z axis, plus an implicit equation.

    ``profile`` returns (r, r', r'', z, z', z'') at u; ``implicit`` returns
    (F, grad F, Hess F) at points of R^3 (arrays of shape (..., 3)).
    """

    name: str
    profile: Callable[[float], tuple]
    implicit: Callable[[np.ndarray], tuple]
    u_range: tuple[float, float]

    def point(self, u: float, theta: float) -> np.ndarray:
        r, _, _, z, _, _ = self.profile(u)
        return np.array([r * np.cos(theta), r * np.sin(theta), z])

    def metric(self, u: float) -> tuple[float, float]:
        """(E, G) with ds^2 = E du^2 + G dtheta^2."""
        r, dr, _, _, dz, _ = self.profile(u)
        return dr * dr + dz * dz, r * r

    def curvature(self, u: float) -> float:
        """Gaussian curvature from the profile."""
        r, dr, ddr, _, dz, ddz = self.profile(u)
        e = dr * dr + dz * dz
        return dz * (dr * ddz - dz * ddr) / (r * e * e)

    def curvature_at(self, x: np.ndarray) -> np.ndarray:
        """Gaussian curvature from the implicit equation (bordered Hessian)."""
        _, grad, hess = self.implicit(np.asarray(x, dtype=float))
        border = np.zeros(grad.shape[:-1] + (4, 4))
        border[..., :3, :3] = hess
        border[..., :3, 3] = grad
        border[..., 3, :3] = grad
        return -np.linalg.det(border) / np.sum(grad * grad, axis=-1) ** 2

    def normal(self, x: np.ndarray) -> np.ndarray:
        _, grad, _ = self.implicit(np.asarray(x, dtype=float))
        return grad / np.linalg.norm(grad, axis=-1, keepdims=True)

    def christoffel(self, u: float) -> tuple[float, float, float]:
        """(Gamma^u_uu, Gamma^u_thth, Gamma^th_uth) of the chart."""
        r, dr, ddr, _, dz, ddz = self.profile(u)
        e = dr * dr + dz * dz
        return (dr * ddr + dz * ddz) / e, -r * dr / e, dr / r

    def check_profile(self, probes: int = 17, h: float = 1e-5) -> float:
        """Largest mismatch between supplied and finite-difference derivatives."""
        lo, hi = self.u_range
        worst = 0.0
        for u in np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), probes):
            p0, pm, pp = self.profile(u), self.profile(u - h), self.profile(u + h)
            for k in (0, 3):
                worst = max(worst, abs((pp[k] - pm[k]) / (2 * h) - p0[k + 1]))
                worst = max(worst, abs((pp[k + 1] - pm[k + 1]) / (2 * h) - p0[k + 2]))
        return worst


def _sphere_profile(u):
    s, c = np.sin(u), np.cos(u)
    return s, c, -s, c, -s, -c


def _sphere_implicit(x):
    return np.sum(x * x, axis=-1) - 1.0, 2.0 * x, np.broadcast_to(2.0 * np.eye(3), x.shape[:-1] + (3, 3))


def _paraboloid_profile(u):
    return u, 1.0, 0.0, u * u, 2.0 * u, 2.0


def _paraboloid_implicit(x):
    f = x[..., 0] ** 2 + x[..., 1] ** 2 - x[..., 2]
    grad = np.stack([2.0 * x[..., 0], 2.0 * x[..., 1], -np.ones_like(x[..., 2])], axis=-1)
    hess = np.broadcast_to(np.diag([2.0, 2.0, 0.0]), x.shape[:-1] + (3, 3))
    return f, grad, hess


def _plane_profile(u):
    return u, 1.0, 0.0, 0.0, 0.0, 0.0


def _plane_implicit(x):
    grad = np.broadcast_to(np.array([0.0, 0.0, 1.0]), x.shape)
    return x[..., 2], grad, np.zeros(x.shape[:-1] + (3, 3))


def sphere() -> SurfaceOfRevolution:
    """Unit sphere, u = polar angle."""
    return SurfaceOfRevolution("sphere", _sphere_profile, _sphere_implicit, (0.0, np.pi))


def paraboloid() -> SurfaceOfRevolution:
    """z = x^2 + y^2, u = distance from the axis."""
    return SurfaceOfRevolution("paraboloid", _paraboloid_profile, _paraboloid_implicit, (0.0, np.inf))


def plane() -> SurfaceOfRevolution:
    return SurfaceOfRevolution("plane", _plane_profile, _plane_implicit, (0.0, np.inf))


SURFACES = {"sphere": sphere, "paraboloid": paraboloid, "plane": plane}


def surface(name: str) -> SurfaceOfRevolution:
    try:
        return SURFACES[name]()
    except KeyError:
        raise ShootingError(f"unknown surface {name!r}; choose from {sorted(SURFACES)}") from None


# ---------------------------------------------------------------------------
# ambient integration


def _ambient_rhs(surf: SurfaceOfRevolution, state: np.ndarray) -> np.ndarray:
    x, v = state[..., :3], state[..., 3:]
    _, grad, hess = surf.implicit(x)
    quad = np.einsum("...i,...ij,...j->...", v, hess, v)
    acc = -(quad / np.sum(grad * grad, axis=-1))[..., None] * grad
    return np.concatenate([v, acc], axis=-1)


def _rk4(rhs, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class Geodesic:
    """Arc-length sampled curve; ``states`` rows are (x, y, z, x', y', z')."""

    surface: SurfaceOfRevolution
    t: np.ndarray
    states: np.ndarray
    truncated: bool = False

    @property
    def points(self) -> np.ndarray:
        return self.states[..., :3]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[..., 3:]

    @property
    def h(self) -> float:
        return float(self.t[1] - self.t[0])

    def energy_drift(self) -> float:
        v = self.velocities
        return float(np.max(np.abs(np.sum(v * v, axis=-1) - 1.0)))

    def state_at(self, t: float) -> np.ndarray:
        """State at arbitrary t by one RK4 step from the grid point below."""
        i = int(np.clip(np.floor(t / self.h), 0, len(self.t) - 2))
        tau = t - self.t[i]
        y = self.states[i]
        if tau == 0.0:
            return y.copy()
        return _rk4(lambda s: _ambient_rhs(self.surface, s), y, tau)


def _tangent_frame(surf: SurfaceOfRevolution, start, direction) -> tuple[np.ndarray, np.ndarray]:
    x0 = np.asarray(start, dtype=float)
    f, _, _ = surf.implicit(x0)
    if abs(f) > 1e-10:
        raise ShootingError(f"start point is not on the {surf.name} (F = {f:.2e})")
    nrm = surf.normal(x0)
    d = np.asarray(direction, dtype=float)
    d = d - (d @ nrm) * nrm
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise ShootingError("direction is normal to the surface")
    return x0, d / norm


def shoot_geodesic(
    surf: SurfaceOfRevolution,
    start,
    direction,
    length: float,
    steps: int = 4096,
    check: bool = True,
) -> Geodesic:
    """Unit-speed geodesic from ``start`` with initial velocity along ``direction``.

    ``direction`` is projected onto the tangent plane and normalized.
    """
    if steps < MIN_STEPS:
        raise ShootingError(f"steps must be at least {MIN_STEPS}")
    x0, d = _tangent_frame(surf, start, direction)
    return _shoot_batch(surf, x0, d[None, :], length, steps, check)[0]


def _shoot_batch(surf, x0, dirs, length, steps, check) -> list[Geodesic]:
    h = length / steps
    y = np.concatenate([np.broadcast_to(x0, dirs.shape), dirs], axis=-1)
    out = np.empty((steps + 1,) + y.shape)
    out[0] = y
    rhs = lambda s: _ambient_rhs(surf, s)  # noqa: E731
    for i in range(steps):
        y = _rk4(rhs, y, h)
        out[i + 1] = y
    t = np.linspace(0.0, length, steps + 1)
    curves = [Geodesic(surf, t, out[:, k]) for k in range(dirs.shape[0])]
    if check:
        for c in curves:
            drift = c.energy_drift()
            if drift > ENERGY_TOL:
                raise ShootingError(f"energy drift {drift:.2e} exceeds {ENERGY_TOL}; use more steps")
    return curves


def shoot_chart(
    surf: SurfaceOfRevolution,
    u0: float,
    theta0: float,
    angle: float,
    length: float,
    steps: int = 4096,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Geodesic in the (u, theta) chart; ``angle`` is measured from the +u direction.

    Returns (t, states with rows (u, theta, u', theta'), truncated).  The
    integration stops when u leaves the open profile domain.
    """
    if steps < MIN_STEPS:
        raise ShootingError(f"steps must be at least {MIN_STEPS}")
    e, g = surf.metric(u0)
    y = np.array([u0, theta0, np.cos(angle) / np.sqrt(e), np.sin(angle) / np.sqrt(g)])

    def rhs(s):
        u, _, du, dth = s
        guu, gtt, gut = surf.christoffel(u)
        return np.array([du, dth, -guu * du * du - gtt * dth * dth, -2.0 * gut * du * dth])

    h = length / steps
    lo, hi = surf.u_range
    states = [y]
    truncated = False
    for _ in range(steps):
        y = _rk4(rhs, y, h)
        if not lo < y[0] < hi or not np.all(np.isfinite(y)):
            truncated = True
            break
        states.append(y)
    states = np.array(states)
    t = h * np.arange(len(states))
    return t, states, truncated


# ---------------------------------------------------------------------------
# linearized oracle


def jacobi_zeros(curve: Geodesic, curvature: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Zeros of y'' + K(t) y = 0, y(0) = 0, y'(0) = 1, along a sampled geodesic.

    K is evaluated on the curve through a cubic spline of the sampled points;
    by default from the implicit equation.  The ODE is solved with a tight
    adaptive integrator.
    """
    from scipy.interpolate import CubicSpline

    k_of = curvature if curvature is not None else curve.surface.curvature_at
    ks = CubicSpline(curve.t, k_of(curve.points))

    def rhs(t, y):
        return [y[1], -ks(t) * y[0]]

    def crossing(t, y):
        return y[0]

    crossing.direction = -1.0
    sol = solve_ivp(rhs, (curve.t[0], curve.t[-1]), [0.0, 1.0], rtol=1e-12, atol=1e-14, events=crossing)
    return sol.t_events[0][sol.t_events[0] > 1e-9]


def jacobi_conjugate_instant(curve: Geodesic, curvature=None) -> float | None:
    zeros = jacobi_zeros(curve, curvature)
    return float(zeros[0]) if zeros.size else None


# ---------------------------------------------------------------------------
# bifurcation witnesses


@dataclass(frozen=True)
class BifurcationWitness:
    """A perturbed geodesic that meets the base trace again at ``t_intersect``.

    ``t_intersect`` is an arc-length parameter; ``fraction`` normalizes it by
    the base length.
    """

    delta: float
    t_intersect: float
    residual: float
    length: float

    @property
    def fraction(self) -> float:
        return self.t_intersect / self.length


@dataclass(frozen=True)
class WitnessSearch:
    witnesses: tuple[BifurcationWitness, ...]
    failed: tuple[float, ...]
    t0: float | None

    @property
    def gaps(self) -> np.ndarray:
        if self.t0 is None:
            return np.array([])
        return np.array([abs(w.t_intersect - self.t0) for w in self.witnesses])

    def monotone(self, skip: int = 1) -> bool:
        """Gaps nonincreasing after dropping the first ``skip`` entries."""
        g = self.gaps[skip:]
        return bool(np.all(np.diff(g) <= 0.0))


def _meridian_normal(base: Geodesic) -> np.ndarray:
    x0, v0 = base.points[0], base.velocities[0]
    m = np.cross(base.surface.normal(x0), v0)
    m /= np.linalg.norm(m)
    off = np.abs(base.points @ m)
    if np.max(off) > 1e-9 or abs(m[2]) > 1e-12:
        raise ShootingError("base geodesic is not a meridian; witness search needs a planar base trace")
    return m


def _bisect(f, a: float, b: float, fa: float, xtol: float) -> float:
    while b - a > xtol:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm < 0.0) == (fa < 0.0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def find_bifurcation_witness(
    surf: SurfaceOfRevolution,
    base: Geodesic,
    t0: float | None,
    deltas,
    xtol: float = 1e-10,
    skip: float = 1e-3,
) -> WitnessSearch:
    """Shoot geodesics with initial direction rotated by each delta and locate
    their first transversal crossing of the base trace.

    The base must be a meridian, so its trace lies in a plane through the
    axis and the signed transverse offset is the distance to that plane.
    Crossings within ``skip`` of the start are ignored.
    """
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0) or np.any(np.diff(deltas) >= 0):
        raise ShootingError("deltas must be positive and strictly decreasing")
    m = _meridian_normal(base)
    x0, d = base.points[0], base.velocities[0]
    nrm = surf.normal(x0)
    side = np.cross(nrm, d)
    dirs = np.cos(deltas)[:, None] * d + np.sin(deltas)[:, None] * side
    shots = _shoot_batch(surf, x0, dirs, base.t[-1], len(base.t) - 1, check=True)

    witnesses, failed = [], []
    for delta, shot in zip(deltas, shots):
        off = shot.points @ m
        start = int(np.searchsorted(shot.t, skip))
        signs = np.sign(off[start:])
        idx = np.flatnonzero(signs[:-1] * signs[1:] < 0)
        if idx.size == 0:
            log.info("delta %.3g: no crossing of the base trace", delta)
            failed.append(float(delta))
            continue
        i = start + int(idx[0])
        f = lambda t, shot=shot: float(shot.state_at(t)[:3] @ m)  # noqa: E731
        t_hit = _bisect(f, float(shot.t[i]), float(shot.t[i + 1]), float(off[i]), xtol)
        residual = abs(f(t_hit))
        if residual > WITNESS_TOL:
            failed.append(float(delta))
            continue
        witnesses.append(BifurcationWitness(float(delta), t_hit, residual, float(base.t[-1])))
    return WitnessSearch(tuple(witnesses), tuple(failed), t0)


# ---------------------------------------------------------------------------
# canonical setups


def paraboloid_meridian(length: float = 3.0, steps: int = 4096) -> Geodesic:
    """Meridian of z = x^2 + y^2 from (1, 0, 1) through the vertex."""
    return shoot_geodesic(paraboloid(), [1.0, 0.0, 1.0], [-1.0, 0.0, -2.0], length, steps)


def sphere_from_pole(length: float = 1.25 * np.pi, steps: int = 4096) -> Geodesic:
    return shoot_geodesic(sphere(), [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], length, steps)


def plane_ray(length: float = 3.0, steps: int = 1024) -> Geodesic:
    return shoot_geodesic(plane(), [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], length, steps)


BASES = {"paraboloid": paraboloid_meridian, "sphere": sphere_from_pole, "plane": plane_ray}


def geometric_deltas(delta0: float = 0.2, count: int = 7) -> np.ndarray:
    return delta0 * 0.5 ** np.arange(count)


def witness_run(name: str, delta0: float = 0.2, count: int = 7, steps: int = 4096) -> WitnessSearch:
    """Oracle t0 plus the witness sequence on a builtin base geodesic."""
    if name not in BASES:
        raise ShootingError(f"unknown surface {name!r}; choose from {sorted(BASES)}")
    base = BASES[name](steps=steps)
    t0 = jacobi_conjugate_instant(base)
    return find_bifurcation_witness(base.surface, base, t0, geometric_deltas(delta0, count))
