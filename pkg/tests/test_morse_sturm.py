import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maslovsf.morse_sturm import (
    AsymmetricCurvatureError,
    CurvatureCurve,
    FlowError,
    MetricForm,
    MorseSturmError,
    MorseSturmSystem,
    classify_instant,
    find_conjugate_instants,
    integrate_flow,
    omega_matrix,
    validate,
)

PI = np.pi


def diag_system(metric, lengths):
    return MorseSturmSystem(MetricForm(metric), CurvatureCurve.constant(np.diag([-(l * l) for l in lengths])))


def scalar_zeros(length, upto=1.0):
    """Zeros of sin(L t) in (0, upto]."""
    m = np.arange(1, int(length * upto / PI) + 2)
    z = m * PI / length
    return z[z <= upto + 1e-12]


# --- data types ----------------------------------------------------------------


def test_metric_rejects_non_unit_entries():
    with pytest.raises(MorseSturmError):
        MetricForm([1.0, 2.0])


def test_metric_index():
    g = MetricForm([-1, 1, -1])
    assert g.index == 2 and g.negative_axes == [0, 2]


def test_validate_scalar():
    assert validate(MorseSturmSystem(MetricForm([1]), CurvatureCurve.constant([[-1.0]])))


def test_validate_diagonal_lorentzian():
    for a, b in [(-3.0, 5.0), (0.0, 0.0), (7.0, -2.0)]:
        validate(MorseSturmSystem(MetricForm([-1, 1]), CurvatureCurve.constant(np.diag([a, b]))))


def test_validate_rejects_g_antisymmetric_curvature():
    sysm = MorseSturmSystem(MetricForm([-1, 1]), CurvatureCurve.constant([[0.0, 1.0], [1.0, 0.0]]))
    # g R = [[0, -1], [1, 0]] is antisymmetric
    with pytest.raises(AsymmetricCurvatureError) as info:
        validate(sysm)
    assert 0.0 <= info.value.t_worst <= 1.0


def test_validate_names_worst_instant():
    # off-diagonal part grows with t, worst at t = 1
    curv = CurvatureCurve.sampled(np.linspace(0, 1, 5), [[[0.0, t], [t, 0.0]] for t in np.linspace(0, 1, 5)])
    with pytest.raises(AsymmetricCurvatureError) as info:
        MorseSturmSystem(MetricForm([-1, 1]), curv).validate()
    assert info.value.t_worst == pytest.approx(1.0)


def test_dimension_mismatch():
    with pytest.raises(MorseSturmError):
        MorseSturmSystem(MetricForm([1, 1]), CurvatureCurve.constant([[1.0]]))


def test_sampled_curvature_rescales_interval():
    # J'' = -J on [0, 2] becomes J'' = -4 J on [0, 1]
    curv = CurvatureCurve.sampled([0.0, 1.0, 2.0], [-1.0, -1.0, -1.0])
    assert curv(0.5)[0, 0] == pytest.approx(-4.0)


def test_diagonal_polynomial_curvature():
    curv = CurvatureCurve.diagonal([[1.0, 2.0], [0.0, 0.0, 3.0]])
    assert np.allclose(curv(0.5), np.diag([2.0, 0.75]))
    assert curv(np.array([0.0, 1.0])).shape == (2, 2, 2)


# --- flow ------------------------------------------------------------------------


def test_flow_needs_64_steps():
    with pytest.raises(FlowError):
        integrate_flow(diag_system([1], [1.0]), steps=32)


@pytest.mark.parametrize("metric", [[1], [-1, 1], [-1, -1, 1]])
def test_free_flow_is_exact(metric):
    n = len(metric)
    sysm = MorseSturmSystem(MetricForm(metric), CurvatureCurve.constant(np.zeros((n, n))))
    flow = integrate_flow(sysm, 128)
    g = np.diag(metric)
    for i in (0, 17, 128):
        t = flow.t[i]
        expected = np.block([[np.eye(n), t * g], [np.zeros((n, n)), np.eye(n)]])
        assert np.allclose(flow.phi[i], expected, atol=1e-14)
        assert np.allclose(flow.sample(i).J, t * g, atol=1e-14)


@pytest.mark.parametrize("length", [1.0, 1.5 * PI, 4.0])
def test_scalar_flow_matches_closed_form(length):
    flow = integrate_flow(diag_system([1], [length]))
    j = np.array([s.J[0, 0] for s in flow.samples])
    assert np.max(np.abs(j - np.sin(length * flow.t) / length)) <= 1e-8


def test_flow_is_symplectic_with_unit_determinant():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((3, 3))
    g = np.diag([-1.0, 1.0, 1.0])
    r = g @ (a + a.T) * 5  # g R symmetric
    sysm = MorseSturmSystem(MetricForm(np.diag(g)), CurvatureCurve.constant(r))
    flow = integrate_flow(sysm)
    om = omega_matrix(3)
    assert np.max(np.abs(np.swapaxes(flow.phi, 1, 2) @ om @ flow.phi - om)) <= 1e-8
    assert np.max(np.abs(np.linalg.det(flow.phi) - 1.0)) <= 1e-8
    assert flow.defect.max() <= 1e-8


def test_phi_at_interpolates_between_grid_points():
    flow = integrate_flow(diag_system([1], [2.0]))
    t = 0.123456789
    assert flow.sample_at(t).J[0, 0] == pytest.approx(np.sin(2 * t) / 2, abs=1e-12)


def test_det_curve_contract():
    flow = integrate_flow(diag_system([1], [1.5 * PI]), 256)
    t, det, sig = flow.det_curve()
    assert len(t) == 257 and np.all((sig >= 0) & (sig <= 1 + 1e-12))


# --- conjugate instants -----------------------------------------------------------


def test_flat_has_no_instants():
    sysm = MorseSturmSystem(MetricForm([-1, 1]), CurvatureCurve.constant(np.zeros((2, 2))))
    assert find_conjugate_instants(sysm, integrate_flow(sysm)) == []


def test_sphere_instant():
    sysm = diag_system([1], [1.5 * PI])
    (c,) = find_conjugate_instants(sysm, integrate_flow(sysm))
    assert abs(c.t0 - 2 / 3) <= 1e-6
    assert c.multiplicity == 1 and c.signature == 1 and c.nondegenerate


def test_split_lorentzian_instants():
    sysm = diag_system([-1, 1], [1.5 * PI, 2.5 * PI])
    found = find_conjugate_instants(sysm, integrate_flow(sysm))
    assert np.allclose([c.t0 for c in found], [0.4, 2 / 3, 0.8], atol=1e-6)
    assert [c.multiplicity for c in found] == [1, 1, 1]
    assert [c.signature for c in found] == [1, -1, 1]


def test_degenerate_signature_instant():
    sysm = diag_system([-1, 1], [1.5 * PI, 1.5 * PI])
    (c,) = find_conjugate_instants(sysm, integrate_flow(sysm))
    assert abs(c.t0 - 2 / 3) <= 1e-6
    assert c.multiplicity == 2 and c.signature == 0 and c.nondegenerate


def test_classify_instant_directly():
    sysm = diag_system([-1, 1], [1.5 * PI, 2.5 * PI])
    flow = integrate_flow(sysm)
    c = classify_instant(sysm, flow, 2 / 3, np.array([[1.0], [0.0]]))
    assert c.signature == -1 and c.multiplicity == 1 and c.nondegenerate


def test_endpoint_instant_is_flagged():
    sysm = diag_system([1], [2 * PI])
    found = find_conjugate_instants(sysm, integrate_flow(sysm))
    assert [round(c.t0, 6) for c in found] == [0.5, 1.0]
    assert found[-1].at_endpoint and not found[0].at_endpoint


def test_signature_parity_and_bound():
    sysm = diag_system([-1, 1, 1], [3.5, 5.0, 8.0])
    for c in find_conjugate_instants(sysm, integrate_flow(sysm)):
        assert abs(c.signature) <= c.multiplicity
        assert (c.signature - c.multiplicity) % 2 == 0


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.sampled_from([-1.0, 1.0]), min_size=1, max_size=3),
    st.lists(st.floats(0.5, 12.0), min_size=3, max_size=3),
)
def test_block_diagonal_instants_are_union_of_scalar_ones(metric, lengths):
    lengths = lengths[: len(metric)]
    # keep zeros separated from each other and from t = 1
    zeros = [(z, a) for a, l in enumerate(lengths) for z in scalar_zeros(l)]
    ts = sorted(z for z, _ in zeros)
    if any(abs(z - 1.0) < 1e-3 for z in ts) or any(b - a < 1e-3 for a, b in zip(ts, ts[1:])):
        return
    sysm = diag_system(metric, lengths)
    found = find_conjugate_instants(sysm, integrate_flow(sysm))
    assert len(found) == len(zeros)
    for c, (z, axis) in zip(found, sorted(zeros)):
        assert abs(c.t0 - z) <= 1e-6
        assert c.multiplicity == 1
        assert c.signature == int(metric[axis])


def test_multiplicity_matches_rank_oracle_on_seeded_instances():
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 50:
        n = int(rng.integers(1, 4))
        metric = rng.choice([-1.0, 1.0], n)
        # shared frequencies produce higher multiplicities
        base = rng.uniform(2.0, 10.0)
        lengths = [base if rng.random() < 0.5 else rng.uniform(2.0, 10.0) for _ in range(n)]
        q = np.eye(n)
        sysm = diag_system(metric, lengths)
        flow = integrate_flow(sysm)
        for c in find_conjugate_instants(sysm, flow):
            if c.at_endpoint:
                continue
            # independent oracle: closed form J(t0) = diag(sin(L t0)/L)
            jt = q @ np.diag([np.sin(l * c.t0) / l for l in lengths]) @ q.T
            sv = np.linalg.svd(jt, compute_uv=False)
            oracle = n - int(np.sum(sv > 1e-6 * max(1.0, sv.max())))
            assert c.multiplicity == oracle
            assert np.allclose(flow.sample_at(c.t0).J @ c.kernel_basis, 0.0, atol=1e-8)
            checked += 1


def test_step_refinement_moves_instants_less_than_1e8():
    sysm = diag_system([-1, 1], [1.5 * PI, 2.5 * PI])
    a = find_conjugate_instants(sysm, integrate_flow(sysm, 2048))
    b = find_conjugate_instants(sysm, integrate_flow(sysm, 4096))
    assert np.max(np.abs(np.array([c.t0 for c in a]) - [c.t0 for c in b])) <= 1e-8


def test_non_diagonal_g_symmetric_system():
    # rotate a Riemannian diagonal system: conjugate instants are unchanged
    th = 0.4
    q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    r = q @ np.diag([-(1.5 * PI) ** 2, -(2.5 * PI) ** 2]) @ q.T
    sysm = MorseSturmSystem(MetricForm([1, 1]), CurvatureCurve.constant(r))
    found = find_conjugate_instants(sysm, integrate_flow(sysm))
    assert np.allclose([c.t0 for c in found], [0.4, 2 / 3, 0.8], atol=1e-6)
    assert all(c.signature == 1 for c in found)
