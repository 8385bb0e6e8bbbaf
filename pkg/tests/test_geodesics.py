import numpy as np
import pytest

from maslovsf.geodesics import (
    ShootingError,
    find_bifurcation_witness,
    geometric_deltas,
    jacobi_conjugate_instant,
    paraboloid,
    paraboloid_meridian,
    plane,
    shoot_chart,
    shoot_geodesic,
    sphere,
    sphere_from_pole,
    surface,
    witness_run,
)


@pytest.mark.parametrize("make", [sphere, paraboloid, plane])
def test_profile_derivatives_consistent(make):
    assert make().check_profile() < 1e-7


@pytest.mark.parametrize("make", [sphere, paraboloid])
def test_profile_and_implicit_curvature_agree(make):
    surf = make()
    lo, hi = surf.u_range
    hi = min(hi, 3.0)
    for u in np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 9):
        x = surf.point(u, 0.3)
        f, _, _ = surf.implicit(x)
        assert abs(f) < 1e-12
        assert surf.curvature_at(x) == pytest.approx(surf.curvature(u), rel=1e-10)


def test_known_curvatures():
    assert sphere().curvature_at(np.array([0.0, 0.0, 1.0])) == pytest.approx(1.0)
    # z = x^2 + y^2 has K = 4 / (1 + 4 r^2)^2
    assert paraboloid().curvature_at(np.array([1.0, 0.0, 1.0])) == pytest.approx(4 / 25)
    assert plane().curvature_at(np.array([0.3, -2.0, 0.0])) == 0.0


def test_unknown_surface():
    with pytest.raises(ShootingError):
        surface("torus")


def test_start_must_lie_on_surface():
    with pytest.raises(ShootingError):
        shoot_geodesic(sphere(), [0.0, 0.0, 2.0], [1.0, 0.0, 0.0], 1.0)


def test_great_circle_closes():
    g = shoot_geodesic(sphere(), [1.0, 0.0, 0.0], [0.0, 0.6, 0.8], 2 * np.pi, 4096)
    assert np.linalg.norm(g.points[-1] - g.points[0]) <= 1e-5
    assert g.energy_drift() <= 1e-7
    # stays on the sphere and in the plane spanned by the initial data
    assert np.max(np.abs(np.linalg.norm(g.points, axis=1) - 1.0)) < 1e-7
    normal = np.cross([1.0, 0.0, 0.0], [0.0, 0.6, 0.8])
    assert np.max(np.abs(g.points @ normal)) < 1e-7


def test_paraboloid_meridian_stays_planar():
    g = paraboloid_meridian()
    assert np.max(np.abs(g.points[:, 1])) < 1e-12
    assert g.energy_drift() <= 1e-7


def test_chart_meridian_keeps_theta():
    t, states, truncated = shoot_chart(paraboloid(), 1.0, 0.7, 0.0, 0.5, 1024)
    assert not truncated
    assert np.max(np.abs(states[:, 1] - 0.7)) < 1e-14
    assert np.max(np.abs(states[:, 3])) < 1e-14


def test_chart_matches_ambient_away_from_axis():
    surf = paraboloid()
    t, states, _ = shoot_chart(surf, 1.0, 0.0, 0.9, 0.6, 2048)
    # same initial data in R^3: angle 0.9 from +u towards +theta
    _, dr, _, _, dz, _ = surf.profile(1.0)
    e_u = np.array([dr, 0.0, dz]) / np.hypot(dr, dz)
    e_th = np.array([0.0, 1.0, 0.0])
    amb = shoot_geodesic(surf, surf.point(1.0, 0.0), np.cos(0.9) * e_u + np.sin(0.9) * e_th, 0.6, 2048)
    u, th = states[-1, 0], states[-1, 1]
    assert np.linalg.norm(surf.point(u, th) - amb.points[-1]) < 1e-8


def test_jacobi_oracle_sphere_is_pi():
    assert jacobi_conjugate_instant(sphere_from_pole()) == pytest.approx(np.pi, abs=1e-8)


def test_jacobi_oracle_plane_has_none():
    base = shoot_geodesic(plane(), [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 3.0, 1024)
    assert jacobi_conjugate_instant(base) is None


def test_paraboloid_oracle_value():
    t0 = jacobi_conjugate_instant(paraboloid_meridian())
    assert t0 == pytest.approx(2.1737052423, abs=1e-8)


def test_witness_requires_meridian_base():
    surf = sphere()
    base = shoot_geodesic(surf, [1.0, 0.0, 0.0], [0.0, 0.6, 0.8], 3.0, 1024)
    with pytest.raises(ShootingError, match="meridian"):
        find_bifurcation_witness(surf, base, None, [0.1])


def test_witness_deltas_validated():
    base = sphere_from_pole(steps=1024)
    with pytest.raises(ShootingError):
        find_bifurcation_witness(base.surface, base, np.pi, [0.1, 0.2])


def test_geometric_deltas():
    assert np.allclose(geometric_deltas(0.2, 3), [0.2, 0.1, 0.05])


def test_sphere_witnesses_hit_antipode():
    run = witness_run("sphere")
    assert len(run.witnesses) == 7 and not run.failed
    assert np.max(run.gaps) <= 1e-6
    assert all(abs(w.fraction - np.pi / (1.25 * np.pi)) < 1e-6 for w in run.witnesses)


def test_paraboloid_witnesses_converge():
    run = witness_run("paraboloid")
    assert len(run.witnesses) == 7
    assert run.gaps[-1] <= 1e-3
    assert run.monotone(skip=1)


def test_plane_has_no_witness():
    run = witness_run("plane")
    assert run.witnesses == () and len(run.failed) == 7
