"""Initial-submanifold (P-focal) boundary data.

The tangent space of P at the initial point is a subspace 𝔓 of R^n given by
a basis; its second fundamental form in the direction of the geodesic is a
symmetric matrix in that basis.  P-Jacobi fields satisfy

    J(0) ∈ 𝔓,    g(J'(0), w) + S(J(0), w) = 0 for w ∈ 𝔓,

and span the initial Lagrangian {(v, alpha): v ∈ 𝔓, alpha|𝔓 = -S(v, .)}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bilinear import DEFAULT_TOL, inertia, null_space
from .index_form import BasisSpec, GalerkinError, focal_relative_index, path_spectral_flow
from .maslov import LagrangianFrame, maslov_index_geodesic
from .morse_sturm import Flow, MetricForm, MorseSturmError, MorseSturmSystem, integrate_flow


class DegenerateSubmanifoldError(MorseSturmError):
    pass


class FocalIdentityError(ArithmeticError):
    def __init__(self, lhs: int, rhs: int, what: str):
        super().__init__(f"{what}: {lhs} != {rhs}")
        self.lhs = lhs
        self.rhs = rhs


@dataclass(frozen=True)
class FocalBoundary:
    p_basis: np.ndarray
    second_fundamental: np.ndarray

    def __post_init__(self):
        p = np.array(self.p_basis, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        k = p.shape[1]
        s = np.array(self.second_fundamental, dtype=float).reshape(k, k)
        if k and np.linalg.matrix_rank(p) != k:
            raise DegenerateSubmanifoldError("tangent basis of P is linearly dependent")
        if np.max(np.abs(s - s.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(s), initial=0.0)):
            raise DegenerateSubmanifoldError("second fundamental form is not symmetric")
        p.setflags(write=False)
        s = 0.5 * (s + s.T)
        s.setflags(write=False)
        object.__setattr__(self, "p_basis", p)
        object.__setattr__(self, "second_fundamental", s)

    @classmethod
    def point(cls, n: int) -> "FocalBoundary":
        """P reduced to a point: the conjugate-point case."""
        return cls(np.zeros((n, 0)), np.zeros((0, 0)))

    @property
    def n(self) -> int:
        return self.p_basis.shape[0]

    @property
    def p(self) -> int:
        return self.p_basis.shape[1]

    def metric_restriction(self, metric: MetricForm) -> np.ndarray:
        return self.p_basis.T @ metric.matrix @ self.p_basis

    def validate(self, metric: MetricForm, tol: float = DEFAULT_TOL) -> "FocalBoundary":
        if self.n != metric.n:
            raise DegenerateSubmanifoldError(
                f"focal data has dimension {self.n}, metric has {metric.n}"
            )
        if self.p and inertia(self.metric_restriction(metric), tol).n_zero:
            raise DegenerateSubmanifoldError("submanifold degenerate at γ(0): g restricted to P is singular")
        return self

    def correction(self, metric: MetricForm, tol: float = DEFAULT_TOL) -> int:
        """n_-(g restricted to 𝔓)."""
        if self.p == 0:
            return 0
        return inertia(self.metric_restriction(metric), tol).n_minus


def initial_lagrangian(metric: MetricForm, focal: FocalBoundary) -> LagrangianFrame:
    n = metric.n
    focal.validate(metric)
    p, s = focal.p_basis, focal.second_fundamental
    cols = []
    if focal.p:
        # covector part solves P^T alpha = -S a with alpha in range(P)
        alpha = -p @ np.linalg.solve(p.T @ p, s)
        cols.append(np.vstack([p, alpha]))
    ann = null_space(p.T) if focal.p else np.eye(n)
    if ann.shape[1]:
        cols.append(np.vstack([np.zeros((n, ann.shape[1])), ann]))
    frame = np.hstack(cols)
    if frame.shape != (2 * n, n):
        raise RuntimeError(f"initial Lagrangian has shape {frame.shape}")
    return LagrangianFrame(frame)


def focal_flow(system: MorseSturmSystem, focal: FocalBoundary, steps: int = 2048) -> Flow:
    return integrate_flow(system, steps, seed=initial_lagrangian(system.metric, focal).frame)


def p_maslov_index(system: MorseSturmSystem, focal: FocalBoundary, flow: Flow | None = None) -> int:
    """Maslov index of t -> Phi(t) L_P relative to L0 over [eps0, 1]."""
    if flow is None:
        flow = focal_flow(system, focal)
    expected = initial_lagrangian(system.metric, focal).frame
    if not np.allclose(flow.seed, expected):
        raise ValueError("flow was not seeded with the focal initial Lagrangian")
    return maslov_index_geodesic(system, flow)


@dataclass(frozen=True)
class FocalIdentityReport:
    maslov: int
    relative_index: int
    correction: int
    spectral_flow: int
    n_minus_start: int
    n_minus_end: int

    @property
    def rhs(self) -> int:
        return self.relative_index - self.correction

    @property
    def identity_ok(self) -> bool:
        return self.maslov == self.rhs

    @property
    def flow_ok(self) -> bool:
        return self.spectral_flow == -self.maslov


def focal_identity_check(
    system: MorseSturmSystem,
    focal: FocalBoundary,
    basis: BasisSpec,
    flow: Flow | None = None,
    grid: int = 256,
    strict: bool = True,
) -> FocalIdentityReport:
    """Compare the P-Maslov index with its index-form expression.

    Checks  maslov_P == n_-(I|S^⊥) - n_+(I|S) - n_-(g|𝔓)  where S is the space
    of g-negative fields vanishing at both ends, and that the spectral flow
    of the focal Galerkin path equals -maslov_P.
    """
    focal.validate(system.metric)
    maslov = p_maslov_index(system, focal, flow)
    rel = focal_relative_index(system, focal, basis)
    sf = path_spectral_flow(system, basis, grid, focal=focal)
    report = FocalIdentityReport(
        maslov=maslov,
        relative_index=rel.value,
        correction=focal.correction(system.metric),
        spectral_flow=sf.spectral_flow,
        n_minus_start=sf.n_minus_start,
        n_minus_end=sf.n_minus_end,
    )
    if strict and not report.identity_ok:
        raise FocalIdentityError(report.maslov, report.rhs, "P-Maslov index vs index-form expression")
    if strict and not report.flow_ok:
        raise FocalIdentityError(report.spectral_flow, -report.maslov, "focal spectral flow vs -P-Maslov")
    return report


__all__ = [
    "DegenerateSubmanifoldError",
    "FocalBoundary",
    "FocalIdentityError",
    "FocalIdentityReport",
    "GalerkinError",
    "focal_flow",
    "focal_identity_check",
    "initial_lagrangian",
    "p_maslov_index",
]
