import numpy as np
import pytest

from maslovsf.maslov import (
    EndpointConjugateError,
    LagrangianFrame,
    concatenation_check,
    crossing_form,
    maslov_index,
    maslov_index_geodesic,
)
from maslovsf.morse_sturm import (
    CurvatureCurve,
    MetricForm,
    MorseSturmSystem,
    find_conjugate_instants,
    integrate_flow,
)

PI = np.pi


def diag_system(metric, lengths):
    return MorseSturmSystem(MetricForm(metric), CurvatureCurve.constant(np.diag([-(l * l) for l in lengths])))


FLAT = MorseSturmSystem(MetricForm([-1, 1]), CurvatureCurve.constant(np.zeros((2, 2))))
SPHERE = diag_system([1], [1.5 * PI])
SPLIT = diag_system([-1, 1], [1.5 * PI, 2.5 * PI])
DEGEN = diag_system([-1, 1], [1.5 * PI, 1.5 * PI])


def test_lagrangian_frame_validation():
    LagrangianFrame.vertical(3)
    with pytest.raises(ValueError, match="isotropic"):
        LagrangianFrame(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError, match="rank"):
        LagrangianFrame(np.zeros((4, 2)))


def test_transported_frames_stay_lagrangian():
    flow = integrate_flow(SPLIT)
    l0 = LagrangianFrame.vertical(2)
    for i in range(0, len(flow), 97):
        l0.transported(flow.phi[i])


def test_crossing_form_sphere():
    flow = integrate_flow(SPHERE)
    (c,) = find_conjugate_instants(SPHERE, flow)
    rep = crossing_form(SPHERE, flow, c)
    # J(t) = sin(Lt)/L so J'(2/3) = cos(pi) = -1 and Q = g(J', J') = 1 on the unit kernel
    assert rep.signature == 1 and not rep.degenerate
    assert rep.form.matrix[0, 0] == pytest.approx(1.0, rel=1e-6)


def test_crossing_form_split_signs():
    flow = integrate_flow(SPLIT)
    sig = [crossing_form(SPLIT, flow, c).signature for c in find_conjugate_instants(SPLIT, flow)]
    assert sig == [1, -1, 1]


def test_crossing_form_degenerate_signature_scenario():
    flow = integrate_flow(DEGEN)
    (c,) = find_conjugate_instants(DEGEN, flow)
    rep = crossing_form(DEGEN, flow, c)
    assert rep.signature == 0 and not rep.degenerate
    ev = np.linalg.eigvalsh(rep.form.matrix)
    assert ev[0] < 0 < ev[1]


def test_crossing_form_equals_metric_on_jprime():
    # the closed form g(J'c, J'c) against the symplectic expression
    flow = integrate_flow(SPLIT)
    for c in find_conjugate_instants(SPLIT, flow):
        rep = crossing_form(SPLIT, flow, c)
        dj = flow.sample_at(c.t0).dJ @ c.kernel_basis
        closed = dj.T @ SPLIT.metric.matrix @ dj
        assert np.allclose(rep.form.matrix, closed, rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("system,expected", [(SPHERE, 1), (SPLIT, 1), (FLAT, 0), (DEGEN, 0)])
def test_maslov_index(system, expected):
    flow = integrate_flow(system)
    assert maslov_index(system, flow, (0.01, 1.0)) == expected
    assert maslov_index_geodesic(system, flow) == expected


@pytest.mark.parametrize("steps", [1024, 2048, 4096])
def test_maslov_stable_under_refinement(steps):
    assert maslov_index_geodesic(SPLIT, integrate_flow(SPLIT, steps)) == 1


def test_riemannian_maslov_counts_multiplicities():
    sysm = diag_system([1, 1, 1], [4.0, 7.5, 7.5])
    flow = integrate_flow(sysm)
    found = find_conjugate_instants(sysm, flow)
    assert maslov_index_geodesic(sysm, flow) == sum(c.multiplicity for c in found)
    # sin(4t) vanishes once in (0, 1]; sin(7.5t) twice, each on two axes
    assert [c.multiplicity for c in found] == [2, 1, 2]


def test_endpoint_conjugate_refused_with_partial_result():
    sysm = diag_system([1], [2 * PI])
    with pytest.raises(EndpointConjugateError) as info:
        maslov_index_geodesic(sysm, integrate_flow(sysm))
    assert info.value.partial == 1
    assert info.value.window[1] < 1.0


def test_window_endpoint_on_crossing_refused():
    flow = integrate_flow(SPLIT)
    with pytest.raises(EndpointConjugateError):
        maslov_index(SPLIT, flow, (0.01, 0.4))


def test_sub_windows():
    flow = integrate_flow(SPLIT)
    assert maslov_index(SPLIT, flow, (0.01, 0.55)) == 1
    assert maslov_index(SPLIT, flow, (0.55, 1.0)) == 0
    assert maslov_index(SPLIT, flow, (0.7, 1.0)) == 1


@pytest.mark.parametrize(
    "system,mid", [(SPHERE, 0.5), (SPLIT, 0.55), (FLAT, 0.3), (FLAT, 0.77), (SPLIT, 0.7), (DEGEN, 0.5)]
)
def test_concatenation(system, mid):
    assert concatenation_check(system, integrate_flow(system), mid)
