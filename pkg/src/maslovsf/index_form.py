"""Galerkin discretization of the rescaled second variation.

For s in [0, 1] the form on fields V with V(0) = V(1) = 0 is

    I_s(V, W) = ∫ g(V', W') + s^2 g(R(s t) V, W) dt,

which at s = 0 is ∫ g(V', W') and at s = 1 is the index form.  In the focal
variant V(0) may move in the tangent space 𝔓 of the initial submanifold and
the boundary term -s S(V(0), W(0)) is added.

Basis functions are scalar functions f times constant vectors.  Interior
functions come with every coordinate axis e_a; the focal variant appends a
boundary function (equal to 1 at t = 0, 0 at t = 1) times each column of the
𝔓 basis.  Interior functions along g-negative axes span the discrete version
of the negative space H^- (fields with values in the g-negative distribution
vanishing at both ends).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .bilinear import (
    DEFAULT_TOL,
    CrossingBracket,
    Inertia,
    MatrixPath,
    RelativeIndex,
    Subspace,
    SymForm,
    eigvalsh,
    inertia,
    relative_index,
    track_crossings,
)
from .morse_sturm import MorseSturmSystem

if TYPE_CHECKING:
    from .focal import FocalBoundary

GAUSS_POINTS = 32
QUADRATURE_TOL = 1e-10
DEFAULT_SIZE = 32
DEFAULT_GRID = 256


class GalerkinError(ValueError):
    pass


class QuadratureError(GalerkinError):
    pass


class IdentityError(ArithmeticError):
    def __init__(self, message: str, values: dict):
        super().__init__(message)
        self.values = values


@dataclass(frozen=True)
class BasisSpec:
    """Scalar trial functions on [0, 1].

    ``kind`` is "sine" (sin(m pi t), m = 1..N) or "fem" (hat functions on N
    interior nodes of a uniform mesh).
    """

    kind: str = "sine"
    size: int = DEFAULT_SIZE

    def __post_init__(self):
        if self.kind not in ("sine", "fem"):
            raise GalerkinError(f"unknown basis kind {self.kind!r}; use 'sine' or 'fem'")
        if int(self.size) != self.size or self.size < 1:
            raise GalerkinError(f"basis size must be a positive integer, got {self.size}")

    def dimension(self, n: int, p: int = 0) -> int:
        return n * self.size + p

    @property
    def panels(self) -> np.ndarray:
        """Quadrature panel edges."""
        if self.kind == "fem":
            return np.linspace(0.0, 1.0, self.size + 2)
        return np.linspace(0.0, 1.0, math.ceil(self.size / 8) + 2)

    def values(self, t: np.ndarray, boundary: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """(f_i(t_q), f_i'(t_q)) as arrays of shape (len(t), N [+1])."""
        t = np.asarray(t, dtype=float)
        if self.kind == "sine":
            m = np.arange(1, self.size + 1) * np.pi
            f, df = np.sin(np.outer(t, m)), np.cos(np.outer(t, m)) * m
            if boundary:
                f = np.column_stack([f, 1.0 - t])
                df = np.column_stack([df, -np.ones_like(t)])
            return f, df
        h = 1.0 / (self.size + 1)
        nodes = np.arange(0 if boundary else 1, self.size + 1) * h
        x = (t[:, None] - nodes[None, :]) / h
        f = np.clip(1.0 - np.abs(x), 0.0, None)
        df = np.where(np.abs(x) < 1.0, -np.sign(x) / h, 0.0)
        if boundary:
            # half hat at t = 0, ordered last like the sine variant
            f = np.column_stack([f[:, 1:], f[:, 0]])
            df = np.column_stack([df[:, 1:], df[:, 0]])
        return f, df


def _gauss_rule(edges: np.ndarray, points: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(points)
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    wt = 0.5 * (b - a) * w[None, :]
    return t.ravel(), wt.ravel()


class _Quadrature:
    """Tabulated basis values at a composite Gauss rule."""

    def __init__(self, basis: BasisSpec, boundary: bool, points: int):
        self.basis = basis
        self.boundary = boundary
        self.points = points
        self.t, self.w = _gauss_rule(basis.panels, points)
        self.f, self.df = basis.values(self.t, boundary)
        if basis.kind == "fem":
            x, _ = np.polynomial.legendre.leggauss(points)
            xi = 0.5 * (x + 1.0)
            self.local = np.column_stack([1.0 - xi, xi])
            big_n = basis.size
            # mesh nodes 0..N+1 -> position in the function list (or -1)
            order = np.full(big_n + 2, -1)
            order[1: big_n + 1] = np.arange(big_n)
            if boundary:
                order[0] = big_n
            self.node_order = order

    def stiffness(self) -> np.ndarray:
        return (self.df * self.w[:, None]).T @ self.df

    def weighted(self, gr: np.ndarray) -> np.ndarray:
        """M[i, a, j, b] = ∫ f_i f_j (gR)_ab, gr of shape (Q, n, n)."""
        if self.basis.kind == "fem":
            return self._weighted_local(gr)
        q, big_n = self.f.shape
        n = gr.shape[-1]
        fw = (self.f * self.w[:, None])[:, :, None, None] * gr[:, None, :, :]
        m = fw.reshape(q, -1).T @ self.f
        return m.reshape(big_n, n, n, big_n).transpose(0, 1, 3, 2)

    def _weighted_local(self, gr: np.ndarray) -> np.ndarray:
        n = gr.shape[-1]
        elems = self.basis.size + 1
        gr = gr.reshape(elems, self.points, n, n)
        w = self.w.reshape(elems, self.points)
        pair = (self.local[:, :, None] * self.local[:, None, :]).reshape(self.points, 4)
        loc = np.einsum("eq,qk,eqab->ekab", w, pair, gr).reshape(elems, 2, 2, n, n)
        loc = loc.transpose(0, 1, 3, 2, 4)
        nodes = self.basis.size + 2
        full = np.zeros((nodes, n, nodes, n))
        e = np.arange(elems)
        for i in (0, 1):
            for j in (0, 1):
                full[e + i, :, e + j, :] += loc[:, i, :, j, :]
        keep = np.flatnonzero(self.node_order >= 0)
        keep = keep[np.argsort(self.node_order[keep])]
        return full[np.ix_(keep, range(n), keep, range(n))]


@dataclass(frozen=True)
class Discretization:
    """Basis functions f_{phi(k)} * vectors[:, k] for one system and basis."""

    system: MorseSturmSystem
    basis: BasisSpec
    focal: "FocalBoundary | None" = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.focal is not None and self.focal.n != self.system.n:
            raise GalerkinError(
                f"focal data has dimension {self.focal.n}, system has {self.system.n}"
            )

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def p(self) -> int:
        return 0 if self.focal is None else self.focal.p

    @property
    def boundary(self) -> bool:
        return self.p > 0

    @property
    def dim(self) -> int:
        return self.basis.dimension(self.n, self.p)

    @cached_property
    def coefficients(self) -> np.ndarray:
        """C with rows indexed by (function, axis) and one column per basis field."""
        n, big_n = self.n, self.basis.size
        nf = big_n + (1 if self.boundary else 0)
        c = np.zeros((nf * n, self.dim))
        for a in range(n):
            for i in range(big_n):
                c[i * n + a, a * big_n + i] = 1.0
        if self.boundary:
            c[big_n * n:, n * big_n:] = self.focal.p_basis
        return c

    @cached_property
    def negative_indices(self) -> np.ndarray:
        """Basis indices spanning H^-: interior functions along g-negative axes."""
        big_n = self.basis.size
        return np.array(
            [a * big_n + i for a in self.system.metric.negative_axes for i in range(big_n)], dtype=int
        )

    @property
    def negative_space(self) -> Subspace:
        return Subspace.coordinate(self.dim, self.negative_indices)

    def _quadrature(self, points: int) -> _Quadrature:
        key = ("q", points)
        if key not in self._cache:
            self._cache[key] = _Quadrature(self.basis, self.boundary, points)
        return self._cache[key]

    def _stiffness(self, points: int) -> np.ndarray:
        key = ("k", points)
        if key not in self._cache:
            q = self._quadrature(points)
            k = np.kron(q.stiffness(), self.system.metric.matrix)
            self._cache[key] = self.coefficients.T @ k @ self.coefficients
        return self._cache[key]

    def _matrix(self, s: float, points: int) -> np.ndarray:
        a = self._stiffness(points)
        if s != 0.0:
            q = self._quadrature(points)
            g = self.system.metric.matrix
            gr = g @ np.asarray(self.system.curvature(s * q.t)).reshape(-1, self.n, self.n)
            m = q.weighted(gr).reshape(self.coefficients.shape[0], -1)
            a = a + s * s * (self.coefficients.T @ m @ self.coefficients)
            if self.boundary:
                pb = slice(self.n * self.basis.size, self.dim)
                a[pb, pb] -= s * self.focal.second_fundamental
        return 0.5 * (a + a.T)

    def matrix(self, s: float, check: bool = False) -> np.ndarray:
        if not 0.0 <= s <= 1.0:
            raise GalerkinError(f"s = {s} outside [0, 1]")
        a = self._matrix(s, GAUSS_POINTS)
        if check:
            b = self._matrix(s, 2 * GAUSS_POINTS)
            change = np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)
            if change > QUADRATURE_TOL:
                raise QuadratureError(
                    f"quadrature not converged at s = {s}: relative change {change:.2e} on doubling points"
                )
        return a


def assemble(system: MorseSturmSystem, basis: BasisSpec, s: float, check: bool = True) -> SymForm:
    """Galerkin matrix of the rescaled second variation at s."""
    return SymForm(Discretization(system, basis).matrix(s, check))


def assemble_focal(
    system: MorseSturmSystem, focal: "FocalBoundary", basis: BasisSpec, s: float, check: bool = True
) -> SymForm:
    """Focal variant: boundary fields along 𝔓 and the term -s S(V(0), W(0))."""
    return SymForm(Discretization(system, basis, focal).matrix(s, check))


@dataclass(frozen=True)
class GalerkinPath:
    """The matrix path s -> I_s on a grid, with the H^- / H^+ splitting."""

    disc: Discretization
    s_grid: np.ndarray
    matrices: tuple

    @classmethod
    def build(cls, disc: Discretization, grid: int = DEFAULT_GRID) -> "GalerkinPath":
        if grid < 2:
            raise GalerkinError("s grid needs at least two points")
        s = np.linspace(0.0, 1.0, grid)
        mats = tuple(disc.matrix(x, check=x in (0.0, 1.0)) for x in s)
        return cls(disc, s, mats)

    @property
    def negative_indices(self) -> np.ndarray:
        return self.disc.negative_indices

    @property
    def positive_indices(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.disc.dim), self.negative_indices)

    def as_matrix_path(self) -> MatrixPath:
        return MatrixPath(self.s_grid, self.matrices, lambda s: self.disc.matrix(s))

    def eigenvalue_table(self) -> np.ndarray:
        """Rows (s, lambda_1, ..., lambda_dim), eigenvalues ascending."""
        eigs = np.array([eigvalsh(m) for m in self.matrices])
        return np.column_stack([self.s_grid, eigs])


@dataclass(frozen=True)
class SpectralFlowResult:
    spectral_flow: int
    n_minus_start: int
    n_minus_end: int
    dim_h_minus: int
    brackets: tuple[CrossingBracket, ...]
    path: GalerkinPath = field(repr=False)

    @property
    def endpoint_index(self) -> int:
        """n_-(I_1) - dim H^-."""
        return self.n_minus_end - self.dim_h_minus


def _check_splitting(path: GalerkinPath, tol: float) -> None:
    a0 = path.matrices[0]
    neg, pos = path.negative_indices, path.positive_indices
    radius = float(np.max(np.abs(eigvalsh(a0))))
    if path.disc.boundary:
        return
    if neg.size and np.max(np.abs(a0[np.ix_(neg, pos)]), initial=0.0) > 1e-12 * radius:
        raise GalerkinError("I_0 is not block diagonal in the H^-/H^+ splitting")
    if neg.size and inertia(a0[np.ix_(neg, neg)], tol, scale=radius).n_minus != neg.size:
        raise GalerkinError("I_0 is not negative definite on H^-")
    if pos.size and inertia(a0[np.ix_(pos, pos)], tol, scale=radius).n_plus != pos.size:
        raise GalerkinError("I_0 is not positive definite on H^+")


def path_spectral_flow(
    system: MorseSturmSystem,
    basis: BasisSpec,
    grid: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    focal: "FocalBoundary | None" = None,
    strict: bool = True,
) -> SpectralFlowResult:
    """Spectral flow of s -> I_s over [0, 1].

    The integer is n_-(I_0) - n_-(I_1), cross-checked against the tracked
    eigenvalue crossings.  In the conjugate case n_-(I_0) = dim H^-, so the
    flow also equals dim H^- - n_-(I_1); with ``strict`` a failure of either
    check raises IdentityError.
    """
    disc = Discretization(system, basis, focal)
    path = GalerkinPath.build(disc, grid)
    _check_splitting(path, tol)
    brackets = tuple(track_crossings(path.as_matrix_path(), tol))
    start: Inertia = inertia(path.matrices[0], tol)
    end: Inertia = inertia(path.matrices[-1], tol)
    sf = start.n_minus - end.n_minus
    tracked = sum(b.jump for b in brackets)
    dim_h = int(path.negative_indices.size)
    values = dict(sf=sf, tracked=tracked, n_minus_start=start.n_minus, n_minus_end=end.n_minus, dim_h_minus=dim_h)
    if strict and tracked != sf:
        raise IdentityError(f"tracked crossings {tracked} != endpoint inertia difference {sf}", values)
    if strict and focal is None and end.n_minus - dim_h != -sf:
        raise IdentityError(
            f"n_-(I_1) - dim H^- = {end.n_minus - dim_h} but spectral flow is {sf}; "
            "discretization too coarse, increase the basis size",
            values,
        )
    return SpectralFlowResult(sf, start.n_minus, end.n_minus, dim_h, brackets, path)


def relative_index_numeric(
    system: MorseSturmSystem, basis: BasisSpec, tol: float = DEFAULT_TOL, strict: bool = True
) -> RelativeIndex:
    """Index of I_1 relative to the discrete H^- (fields in the negative distribution)."""
    disc = Discretization(system, basis)
    form = SymForm(disc.matrix(1.0, check=True))
    if inertia(form, tol).n_zero:
        raise GalerkinError("I_1 is degenerate: t = 1 is (numerically) conjugate")
    return relative_index(form, disc.negative_space, tol, strict)


def focal_relative_index(
    system: MorseSturmSystem, focal: "FocalBoundary", basis: BasisSpec, tol: float = DEFAULT_TOL, strict: bool = True
) -> RelativeIndex:
    """Index of the focal I_1 relative to the g-negative fields vanishing at both ends."""
    disc = Discretization(system, basis, focal)
    form = SymForm(disc.matrix(1.0, check=True))
    if inertia(form, tol).n_zero:
        raise GalerkinError("focal I_1 is degenerate: t = 1 is (numerically) focal")
    return relative_index(form, disc.negative_space, tol, strict)


__all__ = [
    "BasisSpec",
    "Discretization",
    "GalerkinError",
    "GalerkinPath",
    "IdentityError",
    "QuadratureError",
    "SpectralFlowResult",
    "assemble",
    "assemble_focal",
    "focal_relative_index",
    "path_spectral_flow",
    "relative_index_numeric",
]
