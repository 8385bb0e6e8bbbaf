"""Crossing forms and the Maslov index of l(t) = Phi(t) L relative to L0.

The crossing form at t0 is the derivative l'(t0) restricted to
l(t0) ∩ L0.  With A = Phi' = X Phi the derivative of L -> Phi(L) is
omega(A Phi^-1 ., .) = omega(X ., .) on l(t0).  For u = (0, g J'(t0) c) in the
intersection, X u = (J'(t0) c, 0), so the form is

    Q(c, d) = omega(X u_c, u_d) = g(J'(t0) c, J'(t0) d),

positive for Riemannian metrics.  Both expressions are evaluated here (the
first one directly from Omega and X) and checked against classify_instant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .bilinear import DEFAULT_TOL, SymForm, inertia
from .morse_sturm import (
    ConjugateInstant,
    ConsistencyError,
    Flow,
    MorseSturmError,
    MorseSturmSystem,
    find_conjugate_instants,
    omega_matrix,
    startup_zone,
)

log = logging.getLogger(__name__)

ENDPOINT_GAP = 1e-9


class MaslovError(MorseSturmError):
    pass


class DegenerateCrossingError(MaslovError):
    def __init__(self, instant: ConjugateInstant):
        super().__init__(
            f"crossing at t = {instant.t0:.10f} is degenerate or uncertain; "
            "the Maslov index cannot be read off crossing forms"
        )
        self.instant = instant


class EndpointConjugateError(MaslovError):
    """An endpoint of the window is a conjugate instant.

    ``partial`` carries the Maslov index over (a, t_prev) where t_prev is the
    last non-conjugate point before the offending endpoint, when available.
    """

    def __init__(self, t: float, partial: int | None = None, window: tuple[float, float] | None = None):
        msg = f"window endpoint t = {t:.10f} is conjugate"
        if partial is not None and window is not None:
            msg += f"; Maslov index over ({window[0]:.6g}, {window[1]:.10f}) is {partial}"
        super().__init__(msg)
        self.t = t
        self.partial = partial
        self.window = window


@dataclass(frozen=True)
class LagrangianFrame:
    """2n x n frame whose span is Lagrangian in R^n + R^n*."""

    frame: np.ndarray

    def __post_init__(self):
        f = np.array(self.frame, dtype=float)
        if f.ndim != 2 or f.shape[0] != 2 * f.shape[1]:
            raise ValueError(f"Lagrangian frame must be 2n x n, got {f.shape}")
        n = f.shape[1]
        if np.linalg.matrix_rank(f) != n:
            raise ValueError("Lagrangian frame is rank deficient")
        iso = np.max(np.abs(f.T @ omega_matrix(n) @ f)) if n else 0.0
        if iso > 1e-10 * max(1.0, np.linalg.norm(f) ** 2):
            raise ValueError(f"frame is not isotropic (|F^T Omega F| = {iso:.2e})")
        f.setflags(write=False)
        object.__setattr__(self, "frame", f)

    @property
    def n(self) -> int:
        return self.frame.shape[1]

    @classmethod
    def vertical(cls, n: int) -> "LagrangianFrame":
        """L0 = {0} + dual."""
        return cls(np.vstack([np.zeros((n, n)), np.eye(n)]))

    def transported(self, phi) -> "LagrangianFrame":
        return LagrangianFrame(np.asarray(phi) @ self.frame)


@dataclass(frozen=True)
class CrossingReport:
    t0: float
    form: SymForm
    signature: int
    degenerate: bool


def crossing_form(
    system: MorseSturmSystem, flow: Flow, instant: ConjugateInstant, tol: float = DEFAULT_TOL
) -> CrossingReport:
    """Crossing form on the kernel coordinates of a conjugate instant."""
    t0 = instant.t0
    phi = flow.phi_at(t0)
    u = phi @ flow.seed @ instant.kernel_basis
    x = system.flow_matrix(t0)
    omega = omega_matrix(system.n)
    q = (x @ u).T @ omega @ u
    q = 0.5 * (q + q.T)
    ine = inertia(q, tol)
    report = CrossingReport(t0, SymForm(q), ine.signature, ine.n_zero > 0)
    if instant.nondegenerate and not report.degenerate and report.signature != instant.signature:
        raise ConsistencyError(
            f"crossing form signature {report.signature} != conjugate point signature "
            f"{instant.signature} at t = {t0:.10f}"
        )
    return report


def maslov_index(
    system: MorseSturmSystem,
    flow: Flow,
    window: tuple[float, float] = (0.0, 1.0),
    instants: list[ConjugateInstant] | None = None,
    tol: float = DEFAULT_TOL,
) -> int:
    """Sum of crossing-form signatures over the crossings in (a, b)."""
    a, b = window
    if instants is None:
        instants = find_conjugate_instants(system, flow, tol)
    for c in instants:
        for end in (a, b):
            if abs(c.t0 - end) <= ENDPOINT_GAP and end > 0.0:
                raise EndpointConjugateError(end)
    total = 0
    for c in instants:
        if not a < c.t0 < b:
            continue
        if c.uncertain:
            raise DegenerateCrossingError(c)
        report = crossing_form(system, flow, c, tol)
        if report.degenerate:
            raise DegenerateCrossingError(c)
        total += report.signature
    return total


def maslov_index_geodesic(
    system: MorseSturmSystem,
    flow: Flow,
    instants: list[ConjugateInstant] | None = None,
    tol: float = DEFAULT_TOL,
) -> int:
    """Maslov index of l restricted to [eps0, 1] (t = 1 must not be conjugate)."""
    if instants is None:
        instants = find_conjugate_instants(system, flow, tol)
    eps0 = startup_zone(flow, tol)
    end = [c for c in instants if c.at_endpoint]
    if end:
        inner = [c for c in instants if not c.at_endpoint]
        t_prev = 1.0 - 0.5 * (1.0 - max((c.t0 for c in inner), default=eps0))
        try:
            partial = maslov_index(system, flow, (eps0, t_prev), inner, tol)
        except MaslovError:
            partial = None
        raise EndpointConjugateError(1.0, partial, (eps0, t_prev))
    return maslov_index(system, flow, (eps0, 1.0), instants, tol)


def concatenation_check(
    system: MorseSturmSystem,
    flow: Flow,
    mid: float,
    instants: list[ConjugateInstant] | None = None,
    tol: float = DEFAULT_TOL,
) -> bool:
    """maslov(eps0, mid) + maslov(mid, 1) == maslov(eps0, 1)."""
    if instants is None:
        instants = find_conjugate_instants(system, flow, tol)
    eps0 = startup_zone(flow, tol)
    left = maslov_index(system, flow, (eps0, mid), instants, tol)
    right = maslov_index(system, flow, (mid, 1.0), instants, tol)
    whole = maslov_index(system, flow, (eps0, 1.0), instants, tol)
    if left + right != whole:
        log.error("concatenation failed at mid=%g: %d + %d != %d", mid, left, right, whole)
        return False
    return True
