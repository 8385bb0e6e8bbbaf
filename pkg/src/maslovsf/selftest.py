"""Seeded property suites.  Each suite returns counts of instances and failures;
``run_all`` also runs every builtin scenario and writes deterministic CSVs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .bilinear import (
    DEFAULT_TOL,
    MatrixPath,
    Subspace,
    SymForm,
    b_orthogonal,
    eigvalsh,
    inertia,
    relative_index,
    spectral_flow,
)
from .focal import FocalBoundary, initial_lagrangian, p_maslov_index
from .maslov import concatenation_check, maslov_index_geodesic
from .morse_sturm import integrate_flow, omega_matrix
from .pipeline import _write_atomic, emit, run
from .scenarios import Scenario, builtin_scenarios

log = logging.getLogger(__name__)

SEED = 20240611
SPLITS = (0.3, 0.55, 0.9)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    instances: int
    failures: int
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return self.failures == 0


def _flow_for(sc: Scenario, steps: int = 2048):
    seed = initial_lagrangian(sc.system.metric, sc.focal).frame if sc.focal is not None else None
    return integrate_flow(sc.system, steps, seed=seed)


def symplectic_suite(scenarios: list[Scenario] | None = None, tol: float = 1e-8) -> SuiteResult:
    """Phi^T Omega Phi = Omega and det Phi = 1 on every flow sample."""
    scenarios = scenarios or builtin_scenarios()
    total = bad = 0
    for sc in scenarios:
        flow = _flow_for(sc)
        om = omega_matrix(sc.system.n)
        defect = np.max(np.abs(np.swapaxes(flow.phi, 1, 2) @ om @ flow.phi - om), axis=(1, 2))
        det = np.abs(np.linalg.det(flow.phi) - 1.0)
        total += len(defect)
        bad += int(np.sum((defect > tol) | (det > tol)))
    return SuiteResult("symplectic", total, bad)


def _random_form(rng, d: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = rng.uniform(0.1, 10.0, d) * rng.choice([-1.0, 1.0], d)
    return (q * eig) @ q.T


def _isotropic_pairs(rng, d: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Nondegenerate form with an isotropic subspace of dimension k (2k <= d)."""
    p = rng.standard_normal((d, d)) + d * np.eye(d)
    scales = rng.uniform(0.5, 4.0, d)
    signs = np.ones(d)
    signs[:k] = -1.0
    signs[k: 2 * k] = 1.0
    signs[2 * k:] = rng.choice([-1.0, 1.0], d - 2 * k)
    # pair axis i (negative) with axis k + i (positive) at equal magnitude
    scales[k: 2 * k] = scales[:k]
    diag = signs * scales
    z = np.zeros((d, k))
    for i in range(k):
        z[i, i] = 1.0
        z[k + i, i] = 1.0
    pinv = np.linalg.inv(p)
    b = p.T @ np.diag(diag) @ p
    return 0.5 * (b + b.T), pinv @ z


def _band_hit(m: np.ndarray, radius: float, tol: float) -> bool:
    if m.size == 0:
        return False
    e = np.abs(eigvalsh(m)) / radius
    return bool(np.any((e > 1e-13) & (e < 1e3 * tol)))


def relative_index_suite(count: int = 240, seed: int = SEED, tol: float = DEFAULT_TOL) -> SuiteResult:
    """Definition (relative dimension of the negative eigenspace) vs formula."""
    rng = np.random.default_rng(seed)
    bad = skipped = 0
    for i in range(count):
        d = int(rng.integers(1, 13))
        if i % 4 == 3 and d >= 2:
            k = int(rng.integers(1, d // 2 + 1))
            b, z = _isotropic_pairs(rng, d, k)
            extra = rng.standard_normal((d, int(rng.integers(0, d - k + 1))))
            w = Subspace(np.linalg.qr(np.hstack([z, extra]))[0][:, : min(d, z.shape[1] + extra.shape[1])])
        else:
            b = _random_form(rng, d)
            k = int(rng.integers(0, d + 1))
            w = Subspace(np.linalg.qr(rng.standard_normal((d, d)))[0][:, :k])
        form = SymForm(b)
        radius = float(np.max(np.abs(eigvalsh(b))))
        wp = b_orthogonal(form, w, tol)
        if w.ambiguous or wp.ambiguous or _band_hit(form.restrict(w.orthonormal()), radius, tol) or _band_hit(
            form.restrict(wp.orthonormal()), radius, tol
        ):
            skipped += 1
            continue
        try:
            res = relative_index(form, w, tol, strict=False)
        except Exception as exc:  # noqa: BLE001 - counted as a failure
            log.error("relative index instance %d raised %r", i, exc)
            bad += 1
            continue
        # independent value: n_-(B) - dim W
        oracle = int(np.sum(np.linalg.eigvalsh(b) < 0)) - w.dim
        if not res.agree or res.value != oracle:
            bad += 1
    return SuiteResult("relative-index", count - skipped, bad, skipped)


def path_suite(count: int = 120, seed: int = SEED + 1, tol: float = DEFAULT_TOL) -> SuiteResult:
    """Spectral flow vs endpoint inertia vs tracked crossings, plus congruence invariance."""
    rng = np.random.default_rng(seed)
    bad = 0
    done = 0
    while done < count:
        d = int(rng.integers(1, 9))
        coeffs = [_random_form(rng, d) for _ in range(3)]
        coeffs[2] *= 0.5

        def f(s, c=coeffs):
            return c[0] + 4.0 * (s - 0.5) * c[1] + s * s * c[2]

        a0, a1 = f(0.0), f(1.0)
        if min(np.min(np.abs(np.linalg.eigvalsh(a))) / np.max(np.abs(np.linalg.eigvalsh(a))) for a in (a0, a1)) < 1e-4:
            continue
        done += 1
        path = MatrixPath.from_function(f, np.linspace(0.0, 1.0, 65))
        endpoint = inertia(a0, tol, method="jacobi").n_minus - inertia(a1, tol, method="jacobi").n_minus
        m = rng.standard_normal((d, d)) + 3.0 * np.eye(d)
        cpath = MatrixPath.from_function(lambda s, f=f, m=m: m.T @ f(s) @ m, np.linspace(0.0, 1.0, 65))
        try:
            ok = spectral_flow(path, tol) == endpoint and spectral_flow(cpath, tol) == endpoint
        except Exception as exc:  # noqa: BLE001
            log.error("path instance raised %r", exc)
            ok = False
        bad += not ok
    return SuiteResult("path-spectral-flow", count, bad)


def concatenation_suite(scenarios: list[Scenario] | None = None, splits=SPLITS) -> SuiteResult:
    scenarios = scenarios or builtin_scenarios()
    total = bad = 0
    for sc in scenarios:
        flow = _flow_for(sc)
        for mid in splits:
            total += 1
            bad += not concatenation_check(sc.system, flow, mid)
    return SuiteResult("maslov-concatenation", total, bad)


def isotropic_suite(count: int = 120, seed: int = SEED + 2, tol: float = DEFAULT_TOL) -> SuiteResult:
    """n_-(B) = n_-(B restricted to Z^perp) + dim Z for isotropic Z."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        d = int(rng.integers(2, 13))
        k = int(rng.integers(1, d // 2 + 1))
        b, z = _isotropic_pairs(rng, d, k)
        form = SymForm(b)
        zs = Subspace(z)
        radius = float(np.max(np.abs(eigvalsh(b))))
        if np.max(np.abs(form.restrict(zs.orthonormal()))) > 1e-10 * radius:
            bad += 1
            continue
        zp = b_orthogonal(form, zs, tol)
        lhs = inertia(b, tol).n_minus
        rhs = inertia(form.restrict(zp.orthonormal()), tol, scale=radius).n_minus + zs.dim
        bad += lhs != rhs
    return SuiteResult("isotropic-reduction", count, bad)


def builtin_suite(scenarios: list[Scenario] | None = None) -> SuiteResult:
    """Every builtin reproduces its expected record."""
    scenarios = scenarios or builtin_scenarios()
    bad = 0
    for sc in scenarios:
        exp = sc.expected
        rep = run(sc)
        ok = (
            rep.maslov == exp.maslov
            and rep.spectral_flow == exp.spectral_flow
            and rep.correction == exp.correction
            and len(rep.instants) == len(exp.instants)
            and rep.identity_ok
            and all(
                abs(r.t0 - e.t0) <= 1e-6 and r.multiplicity == e.multiplicity and r.signature == e.signature
                for r, e in zip(rep.instants, exp.instants)
            )
        )
        if exp.certificates:
            ok = ok and tuple(r.certificate for r in rep.instants) == exp.certificates
        if not ok:
            log.error("builtin %s does not match its expected record", sc.name)
        bad += not ok
    return SuiteResult("builtins", len(scenarios), bad)


def focal_reduction_suite(scenarios: list[Scenario] | None = None) -> SuiteResult:
    """A point as initial submanifold reproduces the conjugate-point integers."""
    scenarios = [s for s in (scenarios or builtin_scenarios()) if s.focal is None]
    bad = 0
    for sc in scenarios:
        point = FocalBoundary.point(sc.system.n)
        flow = integrate_flow(sc.system)
        same = p_maslov_index(sc.system, point) == maslov_index_geodesic(sc.system, flow)
        a = run(sc)
        b = run(Scenario(sc.name, sc.system, point))
        same = same and (a.maslov, a.spectral_flow, a.relative_index) == (b.maslov, b.spectral_flow, b.relative_index)
        bad += not same
    return SuiteResult("focal-reduction", len(scenarios), bad)


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "symplectic": symplectic_suite,
    "relative-index": relative_index_suite,
    "path-spectral-flow": path_suite,
    "maslov-concatenation": concatenation_suite,
    "isotropic-reduction": isotropic_suite,
    "builtins": builtin_suite,
    "focal-reduction": focal_reduction_suite,
}


def run_all(out_dir=None) -> list[SuiteResult]:
    results = [suite() for suite in SUITES.values()]
    if out_dir is not None:
        out = Path(out_dir)
        lines = ["suite,instances,failures,skipped"]
        lines += [f"{r.name},{r.instances},{r.failures},{r.skipped}" for r in results]
        _write_atomic(out / "selftest.csv", "\n".join(lines) + "\n")
        for sc in builtin_scenarios():
            emit(run(sc), out / sc.name)
    return results
