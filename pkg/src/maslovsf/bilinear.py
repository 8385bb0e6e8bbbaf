"""Finite-dimensional symmetric bilinear forms.

Index, coindex and nullity of a form, B-orthogonal complements, relative
dimension of subspaces, relative index of a form with respect to a subspace
and the spectral flow of a path of symmetric matrices.

All tolerances are relative: an eigenvalue counts as zero when its modulus is
at most ``tol`` times the spectral radius of the form, and a singular value
counts as zero when it is at most ``tol`` times the largest singular value.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
SYMMETRY_TOL = 1e-12
MAX_REFINE_DEPTH = 60


class RelativeIndexMismatch(ArithmeticError):
    """The two computations of a relative index disagree."""

    def __init__(self, definition: int, formula: int):
        super().__init__(
            f"relative index: eigenspace definition gives {definition}, "
            f"restriction formula gives {formula} (ill-conditioned input?)"
        )
        self.definition = definition
        self.formula = formula


class SpectralFlowError(ValueError):
    """Spectral flow is undefined or could not be resolved."""

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        super().__init__(message)
        self.bracket = bracket


# ---------------------------------------------------------------------------
# eigenvalues


def jacobi_eigh(a, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ascending eigenvalues and the matching orthonormal eigenvectors
    (as columns).  Sweeps continue until the off-diagonal mass is at machine
    precision relative to the Frobenius norm.
    """
    a = np.array(a, dtype=float)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n < 2 or scale == 0.0:
        w = np.diag(a).copy()
        order = np.argsort(w, kind="stable")
        return w[order], v[:, order]

    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.tril(a, -1) ** 2))
        if off <= eps * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        log.warning("jacobi_eigh: no convergence after %d sweeps", max_sweeps)

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigh(a, method: str = "lapack") -> tuple[np.ndarray, np.ndarray]:
    if method == "jacobi":
        return jacobi_eigh(a)
    if method == "lapack":
        return np.linalg.eigh(a)
    raise ValueError(f"unknown eigen method {method!r}")


def eigvalsh(a, method: str = "lapack") -> np.ndarray:
    if method == "jacobi":
        return jacobi_eigh(a)[0]
    if method == "lapack":
        return np.linalg.eigvalsh(a)
    raise ValueError(f"unknown eigen method {method!r}")


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class SymForm:
    """Symmetric bilinear form on R^dim, stored as its Gram matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"form matrix must be square and non-empty, got shape {m.shape}")
        scale = np.max(np.abs(m)) if m.size else 0.0
        asym = np.max(np.abs(m - m.T))
        if asym > SYMMETRY_TOL * max(scale, 1e-300) and asym > 0:
            raise ValueError(f"form matrix is not symmetric (max asymmetry {asym:.3e})")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x, y) -> float:
        return float(np.asarray(x) @ self.matrix @ np.asarray(y))

    def restrict(self, basis) -> np.ndarray:
        """Gram matrix of the restriction to span(basis) (may be 0x0)."""
        b = basis.basis if isinstance(basis, Subspace) else np.asarray(basis, dtype=float)
        r = b.T @ self.matrix @ b
        return 0.5 * (r + r.T)

    def congruent(self, m) -> "SymForm":
        m = np.asarray(m, dtype=float)
        return SymForm(m.T @ self.matrix @ m)


@dataclass(frozen=True)
class Subspace:
    """Subspace of R^ambient_dim given by a full-column-rank basis.

    ``ambiguous`` is set when the subspace came out of a rank decision with a
    singular value inside the tolerance band.
    """

    basis: np.ndarray
    ambiguous: bool = False

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or b.shape[0] < 1:
            raise ValueError(f"basis must be a 2-D array with at least one row, got {b.shape}")
        k = b.shape[1]
        if k > b.shape[0]:
            raise ValueError("more basis vectors than the ambient dimension")
        if k and rank(b) != k:
            raise ValueError("basis vectors are linearly dependent")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0)))

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(np.eye(ambient_dim))

    @classmethod
    def coordinate(cls, ambient_dim: int, indices: Sequence[int]) -> "Subspace":
        return cls(np.eye(ambient_dim)[:, list(indices)])

    def orthonormal(self) -> np.ndarray:
        if self.dim == 0:
            return self.basis.copy()
        q, _ = np.linalg.qr(self.basis)
        return q

    def complement(self, tol: float = DEFAULT_TOL) -> "Subspace":
        """Euclidean orthogonal complement."""
        if self.dim == 0:
            return Subspace.full(self.ambient_dim)
        return Subspace(null_space(self.basis.T, tol))


class Inertia(NamedTuple):
    n_minus: int
    n_zero: int
    n_plus: int

    @property
    def signature(self) -> int:
        return self.n_plus - self.n_minus


@dataclass(frozen=True)
class MatrixPath:
    """Sampled path s -> A(s) of symmetric matrices.

    ``func`` (optional) evaluates the path at arbitrary parameters and enables
    local refinement between grid points.
    """

    grid: np.ndarray
    samples: tuple
    func: Callable[[float], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("path grid needs at least two points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("path grid must be strictly increasing")
        samples = tuple(s if isinstance(s, SymForm) else SymForm(s) for s in self.samples)
        if len(samples) != grid.size:
            raise ValueError("one sample per grid point required")
        if len({s.dim for s in samples}) != 1:
            raise ValueError("all samples must have the same dimension")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_function(cls, func: Callable[[float], np.ndarray], grid) -> "MatrixPath":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, tuple(SymForm(func(s)) for s in grid), func)

    @property
    def dim(self) -> int:
        return self.samples[0].dim

    def at(self, s: float) -> SymForm:
        if self.func is None:
            raise SpectralFlowError("path has no evaluator; cannot refine")
        return SymForm(self.func(s))

    def concatenate(self, other: "MatrixPath") -> "MatrixPath":
        if other.grid[0] != self.grid[-1]:
            raise ValueError("paths do not share the junction point")
        func = None
        if self.func is not None and other.func is not None:
            b = self.grid[-1]
            f1, f2 = self.func, other.func
            func = lambda s: f1(s) if s <= b else f2(s)  # noqa: E731
        return MatrixPath(
            np.concatenate([self.grid, other.grid[1:]]),
            self.samples + other.samples[1:],
            func,
        )


# ---------------------------------------------------------------------------
# rank and subspaces


def rank(m, tol: float = DEFAULT_TOL) -> int:
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def _rank_is_ambiguous(sv: np.ndarray, tol: float, band: float = 1e3) -> bool:
    if sv.size == 0 or sv[0] == 0.0:
        return False
    rel = sv / sv[0]
    return bool(np.any((rel > tol / band) & (rel <= tol * band)))


def null_space(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``m``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    ncols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(ncols)
    _, sv, vt = np.linalg.svd(m)
    if sv.size == 0 or sv[0] == 0.0:
        return np.eye(ncols)
    r = int(np.sum(sv > tol * sv[0]))
    return vt[r:].T.copy()


def intersection(v: Subspace, w: Subspace, tol: float = DEFAULT_TOL) -> Subspace:
    if v.ambient_dim != w.ambient_dim:
        raise ValueError("subspaces live in different ambient spaces")
    if v.dim == 0 or w.dim == 0:
        return Subspace.zero(v.ambient_dim)
    qv, qw = v.orthonormal(), w.orthonormal()
    coeff = null_space(np.hstack([qv, -qw]), tol)
    if coeff.shape[1] == 0:
        return Subspace.zero(v.ambient_dim)
    # coeff -> its V-part is injective, so these vectors are independent
    q, _ = np.linalg.qr(qv @ coeff[: qv.shape[1]])
    return Subspace(q)


def b_orthogonal(form: SymForm, w: Subspace, tol: float = DEFAULT_TOL) -> Subspace:
    """B-orthogonal complement {x : B(x, y) = 0 for all y in W}."""
    if w.ambient_dim != form.dim:
        raise ValueError("subspace and form have different dimensions")
    if w.dim == 0:
        return Subspace.full(form.dim)
    constraint = w.orthonormal().T @ form.matrix
    sv = np.linalg.svd(constraint, compute_uv=False)
    ambiguous = _rank_is_ambiguous(sv, tol)
    if ambiguous:
        log.warning("b_orthogonal: rank decision inside the tolerance band")
    return Subspace(null_space(constraint, tol), ambiguous=ambiguous)


def relative_dimension(v: Subspace, w: Subspace, tol: float = DEFAULT_TOL) -> int:
    """dim(W ∩ V^⊥) − dim(W^⊥ ∩ V), with Euclidean complements."""
    a = intersection(w, v.complement(tol), tol).dim
    b = intersection(w.complement(tol), v, tol).dim
    result = a - b
    if result != w.dim - v.dim:
        raise ArithmeticError(
            f"relative dimension {result} differs from dim W - dim V = {w.dim - v.dim}"
        )
    return result


# ---------------------------------------------------------------------------
# inertia and relative index


def _threshold(eigs: np.ndarray, tol: float) -> float:
    return tol * float(np.max(np.abs(eigs))) if eigs.size else 0.0


def _count(eigs: np.ndarray, thr: float) -> Inertia:
    return Inertia(int(np.sum(eigs < -thr)), int(np.sum(np.abs(eigs) <= thr)), int(np.sum(eigs > thr)))


def inertia(form, tol: float = DEFAULT_TOL, method: str = "lapack", scale: float | None = None) -> Inertia:
    """(n_minus, n_zero, n_plus) of a symmetric form.

    ``scale`` replaces the spectral radius in the zero threshold; it is used
    when restrictions of one form must share the parent form's threshold.
    """
    m = form.matrix if isinstance(form, SymForm) else np.asarray(form, dtype=float)
    if m.size == 0:
        return Inertia(0, 0, 0)
    eigs = eigvalsh(0.5 * (m + m.T), method)
    thr = _threshold(eigs, tol) if scale is None else tol * scale
    return _count(eigs, thr)


class RelativeIndex(NamedTuple):
    value: int
    definition: int
    formula: int

    @property
    def agree(self) -> bool:
        return self.definition == self.formula


def relative_index(form: SymForm, w: Subspace, tol: float = DEFAULT_TOL, strict: bool = True) -> RelativeIndex:
    """Index of ``form`` relative to the subspace ``w``.

    Computed twice: as the relative dimension of the negative eigenspace with
    respect to W, and as n_-(B|W^{⊥B}) − n_+(B|W).  The returned value is the
    latter; with ``strict`` a disagreement raises RelativeIndexMismatch.
    """
    eigs, vecs = np.linalg.eigh(form.matrix)
    radius = float(np.max(np.abs(eigs)))
    thr = tol * radius
    negative = Subspace(vecs[:, eigs < -thr])
    definition = relative_dimension(w, negative, tol)

    w_perp = b_orthogonal(form, w, tol)
    n_minus_perp = inertia(form.restrict(w_perp.orthonormal()), tol, scale=radius).n_minus
    n_plus_w = inertia(form.restrict(w.orthonormal()), tol, scale=radius).n_plus
    formula = n_minus_perp - n_plus_w
    if strict and formula != definition:
        raise RelativeIndexMismatch(definition, formula)
    return RelativeIndex(formula, definition, formula)


# ---------------------------------------------------------------------------
# spectral flow


@dataclass(frozen=True)
class CrossingBracket:
    """Parameter interval containing a net change of the negative index.

    ``jump`` is n_-(lo) − n_-(hi): positive when eigenvalues cross zero
    upwards.
    """

    lo: float
    hi: float
    jump: int

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _state(form: SymForm, tol: float) -> Inertia:
    return inertia(form, tol)


def track_crossings(path: MatrixPath, tol: float = DEFAULT_TOL, resolution: float = 1e-10) -> list[CrossingBracket]:
    """Bracket every change of the negative index along the path.

    Intervals where n_- changes are bisected (when the path has an evaluator)
    until they are shorter than ``resolution`` times the parameter span.
    Degenerate interior samples are skipped over; degenerate endpoints are an
    error.
    """
    states = [_state(f, tol) for f in path.samples]
    grid = path.grid
    if states[0].n_zero or states[-1].n_zero:
        raise SpectralFlowError("endpoint not invertible", (float(grid[0]), float(grid[-1])))

    regular = [i for i, st in enumerate(states) if st.n_zero == 0]
    width = resolution * (grid[-1] - grid[0])
    brackets: list[CrossingBracket] = []

    def refine(a: float, b: float, na: int, nb: int, depth: int):
        if na == nb:
            return
        if path.func is None or b - a <= width:
            brackets.append(CrossingBracket(a, b, na - nb))
            return
        if depth >= MAX_REFINE_DEPTH:
            raise SpectralFlowError("crossing unresolved at maximum refinement depth", (a, b))
        for frac in (0.5, 0.375, 0.625, 0.25, 0.75):
            m = a + frac * (b - a)
            st = _state(path.at(m), tol)
            if st.n_zero == 0:
                break
        else:
            # the bracket lies inside the zero band of the tolerance: the
            # crossing is localized as well as the tolerance allows
            brackets.append(CrossingBracket(a, b, na - nb))
            return
        refine(a, m, na, st.n_minus, depth + 1)
        refine(m, b, st.n_minus, nb, depth + 1)

    for i, j in zip(regular[:-1], regular[1:]):
        refine(float(grid[i]), float(grid[j]), states[i].n_minus, states[j].n_minus, 0)
    return brackets


def spectral_flow(path: MatrixPath, tol: float = DEFAULT_TOL, resolution: float = 1e-10) -> int:
    """Net number of eigenvalues crossing zero upwards along ``path``.

    Equal to n_-(first) − n_-(last); the value is cross-checked against the
    sum of the tracked crossing brackets.
    """
    brackets = track_crossings(path, tol, resolution)
    endpoint = inertia(path.samples[0], tol).n_minus - inertia(path.samples[-1], tol).n_minus
    tracked = sum(b.jump for b in brackets)
    if tracked != endpoint:
        raise SpectralFlowError(
            f"tracked crossings sum to {tracked} but endpoint inertia gives {endpoint}"
        )
    return endpoint
