import numpy as np
import pytest
from scipy.integrate import quad

from maslovsf.focal import FocalBoundary
from maslovsf.index_form import (
    BasisSpec,
    Discretization,
    GalerkinError,
    GalerkinPath,
    QuadratureError,
    assemble,
    assemble_focal,
    path_spectral_flow,
    relative_index_numeric,
)
from maslovsf.maslov import maslov_index_geodesic
from maslovsf.morse_sturm import CurvatureCurve, MetricForm, MorseSturmSystem, integrate_flow

PI = np.pi


def diag_system(metric, lengths):
    return MorseSturmSystem(MetricForm(metric), CurvatureCurve.constant(np.diag([-(l * l) for l in lengths])))


FLAT = MorseSturmSystem(MetricForm([-1, 1]), CurvatureCurve.constant(np.zeros((2, 2))))
SPHERE = diag_system([1], [1.5 * PI])
SPLIT = diag_system([-1, 1], [1.5 * PI, 2.5 * PI])
DEGEN = diag_system([-1, 1], [1.5 * PI, 1.5 * PI])
VARYING = MorseSturmSystem(
    MetricForm([-1, 1]), CurvatureCurve.diagonal([[-10.0, -20.0], [-30.0, 0.0, -40.0]])
)


def test_basis_validation():
    with pytest.raises(GalerkinError):
        BasisSpec("chebyshev", 8)
    with pytest.raises(GalerkinError):
        BasisSpec("sine", 0)


def test_stiffness_sine_diagonal():
    a = assemble(SPHERE, BasisSpec("sine", 10), 0.0).matrix
    m = np.arange(1, 11)
    assert np.allclose(np.diag(a), (m * PI) ** 2 / 2, rtol=1e-12)
    assert np.max(np.abs(a - np.diag(np.diag(a)))) < 1e-10


def test_sphere_s1_sine_diagonal_has_one_negative():
    a = assemble(SPHERE, BasisSpec("sine", 10), 1.0).matrix
    m = np.arange(1, 11)
    assert np.allclose(np.diag(a), ((m * PI) ** 2 - (1.5 * PI) ** 2) / 2, rtol=1e-12)
    assert np.sum(np.linalg.eigvalsh(a) < 0) == 1


def test_fem_stiffness_tridiagonal():
    big_n = 7
    h = 1 / (big_n + 1)
    a = assemble(SPHERE, BasisSpec("fem", big_n), 0.0).matrix
    expected = (2 * np.eye(big_n) - np.eye(big_n, k=1) - np.eye(big_n, k=-1)) / h
    assert np.allclose(a, expected, atol=1e-10)


def test_fem_mass_matches_closed_form():
    # constant R = -c: mass matrix of hats is h/6 * tridiag(1, 4, 1)
    big_n, c = 6, 3.0
    h = 1 / (big_n + 1)
    sysm = MorseSturmSystem(MetricForm([1]), CurvatureCurve.constant([[-c]]))
    a = assemble(sysm, BasisSpec("fem", big_n), 1.0).matrix - assemble(sysm, BasisSpec("fem", big_n), 0.0).matrix
    mass = h / 6 * (4 * np.eye(big_n) + np.eye(big_n, k=1) + np.eye(big_n, k=-1))
    assert np.allclose(a, -c * mass, atol=1e-12)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_entries_match_adaptive_quadrature_for_varying_curvature():
    s = 0.7
    a = assemble(VARYING, BasisSpec("sine", 6), s).matrix
    # oracle for the g-positive axis (index 1): ∫ f_i' f_j' + s^2 R_11(st) f_i f_j
    big_n = 6
    for i, j in [(0, 0), (1, 3), (5, 5)]:
        fi = lambda t, k=i: np.sin((k + 1) * PI * t)  # noqa: E731
        fj = lambda t, k=j: np.sin((k + 1) * PI * t)  # noqa: E731
        dfi = lambda t, k=i: (k + 1) * PI * np.cos((k + 1) * PI * t)  # noqa: E731
        dfj = lambda t, k=j: (k + 1) * PI * np.cos((k + 1) * PI * t)  # noqa: E731
        r11 = lambda t: -30.0 - 40.0 * (s * t) ** 2  # noqa: E731
        val, _ = quad(lambda t: dfi(t) * dfj(t) + s * s * r11(t) * fi(t) * fj(t), 0, 1, epsabs=1e-13, limit=200)
        assert a[big_n + i, big_n + j] == pytest.approx(val, abs=1e-10)
        # g-negative axis: sign flipped through g
        r00 = lambda t: -10.0 - 20.0 * s * t  # noqa: E731
        val0, _ = quad(lambda t: dfi(t) * dfj(t) + s * s * r00(t) * fi(t) * fj(t), 0, 1, epsabs=1e-13, limit=200)
        assert a[i, j] == pytest.approx(-val0, abs=1e-10)


def test_negative_block_is_negated_riemannian_block():
    a = assemble(SPLIT, BasisSpec("sine", 8), 1.0).matrix
    riem = assemble(diag_system([1], [1.5 * PI]), BasisSpec("sine", 8), 1.0).matrix
    assert np.allclose(a[:8, :8], -riem, atol=1e-12)
    assert np.allclose(a[:8, 8:], 0.0)


def test_quadrature_nonconvergence_detected():
    # a curvature spline with a kink inside every sine panel defeats Gauss rules
    t = np.linspace(0, 1, 41)
    vals = np.where(np.arange(41) % 2 == 0, -50.0, 50.0)
    sysm = MorseSturmSystem(MetricForm([1]), CurvatureCurve.sampled(t, vals))
    with pytest.raises(QuadratureError):
        assemble(sysm, BasisSpec("sine", 4), 1.0)


def test_splitting_blocks_at_s0():
    path = GalerkinPath.build(Discretization(SPLIT, BasisSpec("sine", 8)), grid=3)
    a0 = path.matrices[0]
    neg, pos = path.negative_indices, path.positive_indices
    assert np.all(np.linalg.eigvalsh(a0[np.ix_(neg, neg)]) < 0)
    assert np.all(np.linalg.eigvalsh(a0[np.ix_(pos, pos)]) > 0)
    assert np.allclose(a0[np.ix_(neg, pos)], 0.0)


@pytest.mark.parametrize("kind", ["sine", "fem"])
@pytest.mark.parametrize("size", [16, 32, 64])
@pytest.mark.parametrize(
    "system,sf,dim_neg",
    [(SPHERE, -1, 0), (SPLIT, -1, 1), (DEGEN, 0, 1), (FLAT, 0, 1)],
    ids=["sphere", "split", "degenerate", "flat"],
)
def test_path_spectral_flow(kind, size, system, sf, dim_neg):
    res = path_spectral_flow(system, BasisSpec(kind, size))
    assert res.spectral_flow == sf
    assert res.dim_h_minus == dim_neg * size
    assert res.endpoint_index == -sf
    assert sum(b.jump for b in res.brackets) == sf


def test_split_endpoint_counts():
    res = path_spectral_flow(SPLIT, BasisSpec("sine", 32))
    assert res.n_minus_end == 33 and res.dim_h_minus == 32


def test_sf_equals_minus_maslov_for_varying_curvature():
    m = maslov_index_geodesic(VARYING, integrate_flow(VARYING))
    for kind in ("sine", "fem"):
        res = path_spectral_flow(VARYING, BasisSpec(kind, 32))
        assert res.spectral_flow == -m


@pytest.mark.parametrize("system,expected", [(SPHERE, 1), (SPLIT, 1), (FLAT, 0), (DEGEN, 0)])
def test_relative_index_numeric(system, expected):
    res = relative_index_numeric(system, BasisSpec("sine", 32))
    assert res.value == expected and res.agree


def test_relative_index_refuses_conjugate_endpoint():
    with pytest.raises(GalerkinError):
        relative_index_numeric(diag_system([1], [PI]), BasisSpec("sine", 16))


def test_basis_congruence_keeps_integers():
    disc = Discretization(SPLIT, BasisSpec("sine", 16))
    rng = np.random.default_rng(0)
    d = np.diag(rng.uniform(0.1, 10.0, disc.dim))
    a1 = d @ disc.matrix(1.0) @ d
    ev = np.linalg.eigvalsh(a1)
    assert np.sum(ev < 0) - 16 == 1


def test_focal_point_reduces_to_plain_assembly():
    for system in (SPHERE, SPLIT, VARYING):
        point = FocalBoundary.point(system.n)
        for s in (0.0, 0.3, 1.0):
            a = assemble(system, BasisSpec("sine", 12), s).matrix
            b = assemble_focal(system, point, BasisSpec("sine", 12), s).matrix
            assert np.max(np.abs(a - b)) <= 1e-12


def test_focal_boundary_term_vanishes_at_s0():
    sysm = diag_system([1], [0.75 * PI])
    f0 = FocalBoundary(np.eye(1), [[0.0]])
    f1 = FocalBoundary(np.eye(1), [[5.0]])
    a = assemble_focal(sysm, f0, BasisSpec("sine", 8), 0.0).matrix
    b = assemble_focal(sysm, f1, BasisSpec("sine", 8), 0.0).matrix
    assert np.array_equal(a, b)
    c = assemble_focal(sysm, f1, BasisSpec("sine", 8), 0.5).matrix
    d = assemble_focal(sysm, f0, BasisSpec("sine", 8), 0.5).matrix
    assert (c - d)[-1, -1] == pytest.approx(-0.5 * 5.0)


@pytest.mark.parametrize("kind", ["sine", "fem"])
def test_equator_focal_form_has_one_extra_negative(kind):
    sysm = diag_system([1], [0.75 * PI])
    a = assemble_focal(sysm, FocalBoundary(np.eye(1), [[0.0]]), BasisSpec(kind, 32), 1.0).matrix
    assert np.sum(np.linalg.eigvalsh(a) < 0) - 0 == 1


def test_focal_dimension_mismatch():
    with pytest.raises(GalerkinError):
        assemble_focal(SPHERE, FocalBoundary(np.eye(2), np.zeros((2, 2))), BasisSpec("sine", 4), 1.0)


def test_eigenvalue_table_shape_and_order():
    res = path_spectral_flow(SPHERE, BasisSpec("sine", 8), grid=16)
    table = res.path.eigenvalue_table()
    assert table.shape == (16, 9)
    assert np.all(np.diff(table[:, 1:], axis=1) >= 0)
