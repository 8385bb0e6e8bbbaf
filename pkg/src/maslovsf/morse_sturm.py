"""Morse-Sturm systems J'' = R J, their symplectic flow and conjugate instants.

The metric is a fixed diagonal form with +-1 entries (a parallel orthonormal
frame along the geodesic).  The flow acts on pairs (v, alpha) of a vector and
a covector, alpha = g J', and solves Phi' = X(t) Phi with

    X(t) = [[0, g^-1], [g R(t), 0]].

A flow is always integrated together with a seed Lagrangian frame (2n x n);
the default seed {0} + dual gives the Jacobi fields vanishing at t = 0, a
focal seed gives the P-Jacobi fields.  Conjugate (or focal) instants are the
t > 0 at which the J-block of Phi(t) @ seed drops rank.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .bilinear import DEFAULT_TOL, inertia

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
MAX_DEFECT = 1e-6
STARTUP_FRACTION = 0.01
# relative singular values in (tol, AMBIGUITY * tol] make a rank decision uncertain
AMBIGUITY = 1e3


class MorseSturmError(ValueError):
    pass


class AsymmetricCurvatureError(MorseSturmError):
    def __init__(self, t_worst: float, asym: float):
        super().__init__(f"g*R(t) is not symmetric: asymmetry {asym:.3e} at t = {t_worst:.6g}")
        self.t_worst = t_worst
        self.asym = asym


class FlowError(MorseSturmError):
    pass


class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


def omega_matrix(n: int) -> np.ndarray:
    """Matrix of the canonical symplectic form on R^n + R^n*.

    omega((v1, a1), (v2, a2)) = a2(v1) - a1(v2) = z1^T Omega z2.
    """
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class MetricForm:
    diag: tuple

    def __post_init__(self):
        d = tuple(float(x) for x in np.atleast_1d(self.diag))
        if not d:
            raise MorseSturmError("metric needs at least one entry")
        if any(x not in (-1.0, 1.0) for x in d):
            raise MorseSturmError(f"metric entries must be +1 or -1, got {d}")
        object.__setattr__(self, "diag", d)

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def index(self) -> int:
        return sum(1 for x in self.diag if x < 0)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    @property
    def negative_axes(self) -> list[int]:
        return [i for i, x in enumerate(self.diag) if x < 0]


@dataclass(frozen=True, eq=False)
class CurvatureCurve:
    """t -> R(t) on [0, 1].

    kind "constant": payload is an n x n matrix.
    kind "diagonal": payload is a tuple of ascending polynomial coefficient
    arrays, one per diagonal entry.
    kind "sampled": payload is (times, samples) with samples of shape
    (m, n, n); evaluation uses a cubic spline.
    """

    kind: str
    payload: tuple

    def __post_init__(self):
        if self.kind not in ("constant", "diagonal", "sampled"):
            raise MorseSturmError(f"unknown curvature kind {self.kind!r}")

    @classmethod
    def constant(cls, matrix) -> "CurvatureCurve":
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise MorseSturmError("curvature matrix must be square")
        return cls("constant", (m,))

    @classmethod
    def diagonal(cls, coefficients: Sequence[Sequence[float]]) -> "CurvatureCurve":
        coeffs = tuple(np.atleast_1d(np.asarray(c, dtype=float)) for c in coefficients)
        return cls("diagonal", coeffs)

    @classmethod
    def sampled(cls, times, samples) -> "CurvatureCurve":
        """Samples on [a, b] are rescaled onto [0, 1] (R picks up (b - a)^2)."""
        times = np.asarray(times, dtype=float)
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None, None]
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise MorseSturmError("sample times must be strictly increasing, at least two")
        if samples.shape[0] != times.size or samples.shape[1] != samples.shape[2]:
            raise MorseSturmError("samples must have shape (len(times), n, n)")
        a, b = times[0], times[-1]
        if a != 0.0 or b != 1.0:
            length = b - a
            times = (times - a) / length
            samples = samples * length**2
        return cls("sampled", (times, samples))

    @property
    def n(self) -> int:
        if self.kind == "constant":
            return self.payload[0].shape[0]
        if self.kind == "diagonal":
            return len(self.payload)
        return self.payload[1].shape[1]

    @cached_property
    def _spline(self):
        times, samples = self.payload
        return CubicSpline(times, samples, axis=0)

    def __call__(self, t):
        """R(t) for scalar t, or a stack of shape (len(t), n, n)."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        n = self.n
        if self.kind == "constant":
            out = np.broadcast_to(self.payload[0], (ts.size, n, n)).copy()
        elif self.kind == "diagonal":
            out = np.zeros((ts.size, n, n))
            for i, c in enumerate(self.payload):
                out[:, i, i] = np.polynomial.polynomial.polyval(ts, c)
        else:
            out = self._spline(ts)
        return out[0] if scalar else out


@dataclass(frozen=True)
class MorseSturmSystem:
    metric: MetricForm
    curvature: CurvatureCurve

    def __post_init__(self):
        if self.metric.n != self.curvature.n:
            raise MorseSturmError(
                f"metric has dimension {self.metric.n} but curvature has {self.curvature.n}"
            )

    @property
    def n(self) -> int:
        return self.metric.n

    def flow_matrix(self, t):
        """X(t); stacked when t is an array."""
        g = self.metric.matrix
        r = self.curvature(t)
        n = self.n
        if np.ndim(t) == 0:
            x = np.zeros((2 * n, 2 * n))
            x[:n, n:] = g
            x[n:, :n] = g @ r
            return x
        x = np.zeros((r.shape[0], 2 * n, 2 * n))
        x[:, :n, n:] = g
        x[:, n:, :n] = g @ r
        return x

    def validate(self, probes: int = 256) -> "MorseSturmSystem":
        ts = np.linspace(0.0, 1.0, probes)
        gr = self.metric.matrix @ self.curvature(ts)
        asym = np.max(np.abs(gr - np.swapaxes(gr, 1, 2)), axis=(1, 2))
        scale = max(1.0, float(np.max(np.abs(gr))))
        worst = int(np.argmax(asym))
        if asym[worst] > SYMMETRY_TOL * scale:
            raise AsymmetricCurvatureError(float(ts[worst]), float(asym[worst]))
        return self


def validate(system: MorseSturmSystem) -> MorseSturmSystem:
    return system.validate()


def conjugate_frame(n: int) -> np.ndarray:
    """Seed frame of L0 = {0} + dual."""
    return np.vstack([np.zeros((n, n)), np.eye(n)])


# ---------------------------------------------------------------------------
# flow


@dataclass(frozen=True)
class FlowSample:
    """Phi(t) and the matrix solution seeded by the flow's initial frame."""

    t: float
    phi: np.ndarray
    J: np.ndarray
    dJ: np.ndarray
    gdJ: np.ndarray = field(repr=False)

    @property
    def frame(self) -> np.ndarray:
        """Columns (J c, g J' c) spanning l(t)."""
        return np.vstack([self.J, self.gdJ])


def _rk4_step(phi: np.ndarray, x0: np.ndarray, xm: np.ndarray, x1: np.ndarray, h: float) -> np.ndarray:
    k1 = x0 @ phi
    k2 = xm @ (phi + 0.5 * h * k1)
    k3 = xm @ (phi + 0.5 * h * k2)
    k4 = x1 @ (phi + h * k3)
    return phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(eq=False)
class Flow:
    """Fixed-step RK4 solution of Phi' = X Phi on a uniform grid of [0, 1]."""

    system: MorseSturmSystem
    seed: np.ndarray
    t: np.ndarray
    phi: np.ndarray
    defect: np.ndarray

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def steps(self) -> int:
        return self.t.size - 1

    @property
    def h(self) -> float:
        return 1.0 / self.steps

    def __len__(self) -> int:
        return self.t.size

    def phi_at(self, t: float) -> np.ndarray:
        """Phi(t) by a partial RK4 step from the grid point at or below t."""
        if not 0.0 <= t <= 1.0 + 1e-14:
            raise ValueError(f"t = {t} outside [0, 1]")
        i = min(int(math.floor(t / self.h)), self.steps)
        dt = t - self.t[i]
        if dt <= 0.0:
            return self.phi[i]
        x = self.system.flow_matrix(np.array([self.t[i], self.t[i] + 0.5 * dt, t]))
        return _rk4_step(self.phi[i], x[0], x[1], x[2], dt)

    def frames(self) -> np.ndarray:
        """Stack of Phi(t_i) @ seed, shape (steps + 1, 2n, n)."""
        return self.phi @ self.seed

    def frame_at(self, t: float) -> np.ndarray:
        return self.phi_at(t) @ self.seed

    def sample(self, i: int) -> FlowSample:
        return self._make_sample(float(self.t[i]), self.phi[i])

    def sample_at(self, t: float) -> FlowSample:
        return self._make_sample(t, self.phi_at(t))

    def _make_sample(self, t: float, phi: np.ndarray) -> FlowSample:
        n = self.n
        z = phi @ self.seed
        ginv = self.system.metric.matrix  # +-1 diagonal: its own inverse
        return FlowSample(t, phi, z[:n].copy(), ginv @ z[n:], z[n:].copy())

    @property
    def samples(self) -> list[FlowSample]:
        return [self.sample(i) for i in range(len(self))]

    def det_curve(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(t, det J(t), sigma_min(t)) on the grid.

        sigma_min is the smallest singular value of the J-block of an
        orthonormal basis of l(t): 0 exactly at conjugate instants, 1 when
        l(t) is orthogonal to L0.
        """
        z = self.frames()
        n = self.n
        det = np.linalg.det(z[:, :n])
        q, _ = np.linalg.qr(z)
        sv = np.linalg.svd(q[:, :n], compute_uv=False)
        return self.t.copy(), det, sv[:, -1].copy()


def integrate_flow(system: MorseSturmSystem, steps: int = 2048, seed=None, check: bool = True) -> Flow:
    """Integrate Phi' = X(t) Phi, Phi(0) = I, with classical RK4.

    ``seed`` is the initial Lagrangian frame (default {0} + dual).  The
    symplectic defect max|Phi^T Omega Phi - Omega| is recorded per sample;
    with ``check`` a defect above 1e-6 raises FlowError.
    """
    if steps < 64:
        raise FlowError("at least 64 steps required")
    n = system.n
    seed = conjugate_frame(n) if seed is None else np.asarray(seed, dtype=float)
    if seed.shape != (2 * n, n):
        raise FlowError(f"seed frame must have shape {(2 * n, n)}, got {seed.shape}")
    h = 1.0 / steps
    t = np.linspace(0.0, 1.0, steps + 1)
    x_grid = system.flow_matrix(t)
    x_mid = system.flow_matrix(t[:-1] + 0.5 * h)
    phi = np.empty((steps + 1, 2 * n, 2 * n))
    phi[0] = np.eye(2 * n)
    for i in range(steps):
        phi[i + 1] = _rk4_step(phi[i], x_grid[i], x_mid[i], x_grid[i + 1], h)
    omega = omega_matrix(n)
    defect = np.max(np.abs(np.swapaxes(phi, 1, 2) @ omega @ phi - omega), axis=(1, 2))
    if check and defect.max() > MAX_DEFECT:
        raise FlowError(
            f"symplectic defect {defect.max():.2e} exceeds {MAX_DEFECT:g}; use more steps"
        )
    return Flow(system, seed, t, phi, defect)


# ---------------------------------------------------------------------------
# conjugate instants


@dataclass(frozen=True, eq=False)
class ConjugateInstant:
    t0: float
    multiplicity: int
    kernel_basis: np.ndarray
    signature: int
    nondegenerate: bool
    uncertain: bool = False
    at_endpoint: bool = False

    def __repr__(self) -> str:
        flags = "".join(
            f for f, on in ((" uncertain", self.uncertain), (" endpoint", self.at_endpoint)) if on
        )
        return (
            f"ConjugateInstant(t0={self.t0:.10f}, mul={self.multiplicity}, "
            f"sgn={self.signature:+d}, nondegenerate={self.nondegenerate}{flags})"
        )


def _transversality(z: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Singular values (ascending) of the J-block of an orthonormal basis of
    span(z), and the matching coefficient vectors c with J c ~ sigma."""
    q, r = np.linalg.qr(z)
    _, sv, vt = np.linalg.svd(q[:n])
    coeff = np.linalg.solve(r, vt.T)
    return sv[::-1], coeff[:, ::-1]


def _sigma_min(flow: Flow, t: float) -> float:
    return _transversality(flow.frame_at(t), flow.n)[0][0]


def _golden_min(f, a: float, b: float, xtol: float = 1e-13) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = a, b
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > xtol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    best = 0.5 * (lo + hi)
    # the minimum may sit on the bracket edge (t = 1)
    return min((best, a, b), key=f)


def startup_zone(flow: Flow, tol: float = DEFAULT_TOL, fraction: float = STARTUP_FRACTION) -> float:
    """Largest grid instant eps0 <= fraction such that l(t) is transverse to
    L0 at every grid point of (0, eps0]."""
    _, _, sig = flow.det_curve()
    eps0 = flow.t[1]
    for i in range(1, len(flow)):
        if flow.t[i] > fraction + 1e-15 or sig[i] <= tol:
            break
        eps0 = flow.t[i]
    return float(eps0)


def classify_instant(
    system: MorseSturmSystem,
    flow: Flow,
    t0: float,
    kernel,
    tol: float = DEFAULT_TOL,
    *,
    uncertain: bool = False,
) -> ConjugateInstant:
    """Multiplicity, signature and nondegeneracy at a conjugate instant.

    The vectors J'(t0) c for c in the kernel span the g-orthogonal
    complement of the range of J(t0); the signature is that of g restricted
    to them.
    """
    kernel = np.atleast_2d(np.asarray(kernel, dtype=float))
    if kernel.shape[0] != system.n:
        kernel = kernel.T
    sample = flow.sample_at(t0)
    g = system.metric.matrix
    u = sample.dJ @ kernel
    residual = np.max(np.abs(u.T @ g @ sample.J)) if kernel.shape[1] else 0.0
    scale = max(np.linalg.norm(u), 1e-300) * max(np.linalg.norm(sample.J), 1.0)
    if residual > 1e-6 * scale:
        raise ConsistencyError(
            f"J'(t0) kernel image is not g-orthogonal to range J(t0) (residual {residual:.2e})"
        )
    ine = inertia(u.T @ g @ u, tol)
    return ConjugateInstant(
        t0=float(t0),
        multiplicity=kernel.shape[1],
        kernel_basis=kernel,
        signature=ine.signature,
        nondegenerate=ine.n_zero == 0,
        uncertain=uncertain,
        at_endpoint=bool(t0 >= 1.0 - 1e-9),
    )


def find_conjugate_instants(
    system: MorseSturmSystem,
    flow: Flow,
    tol: float = DEFAULT_TOL,
    startup: float = STARTUP_FRACTION,
    detect: float = 0.25,
) -> list[ConjugateInstant]:
    """Locate and classify the instants in (0, 1] where l(t) meets L0.

    Candidates are grid local minima of sigma_min below ``detect`` and grid
    intervals where det J changes sign.  Each is refined by golden-section
    search on sigma_min over the neighbouring grid cells.  Instants inside
    the startup zone (t < ``startup``) are rejected as spurious.
    """
    n = system.n
    t, det, sig = flow.det_curve()
    last = len(t) - 1
    candidates = set()
    for i in range(1, last + 1):
        left_ok = sig[i] <= sig[i - 1]
        right_ok = i == last or sig[i] <= sig[i + 1]
        if left_ok and right_ok and sig[i] < detect:
            candidates.add(i)
    for i in np.nonzero(det[1:-1] * det[2:] < 0)[0] + 1:
        candidates.add(int(i) if sig[i] <= sig[i + 1] else int(i) + 1)

    found: list[ConjugateInstant] = []
    for i in sorted(candidates):
        a = t[i - 1]
        b = t[min(i + 1, last)]
        t0 = _golden_min(lambda s: _sigma_min(flow, s), a, b)
        if any(abs(t0 - c.t0) < 1e-9 for c in found):
            continue
        sv, coeff = _transversality(flow.frame_at(t0), n)
        if sv[0] > AMBIGUITY * tol:
            continue
        if t0 < startup:
            log.warning("rejecting rank drop at t = %.3e inside the startup zone", t0)
            continue
        mult = int(np.sum(sv <= tol))
        uncertain = bool(np.any((sv > tol) & (sv <= AMBIGUITY * tol)))
        if mult == 0:
            mult = int(np.sum(sv <= AMBIGUITY * tol))
        kernel, _ = np.linalg.qr(coeff[:, :mult])
        found.append(classify_instant(system, flow, t0, kernel, tol, uncertain=uncertain))
    found.sort(key=lambda c: c.t0)
    return found
