import csv

import numpy as np
import pytest

from wgf3d.geometry import (GeometryConfigurationError, build_bend, build_capsule, build_circular_guide,
                            build_gamma_perp, build_sphere, disc_ring_radii, watertight_audit)
from wgf3d.windowing import WindowParams


def _meshes():
    yield "sphere", build_sphere(0.7, 2, 6)
    yield "capsule", build_capsule(0.3, 1.0, 6)
    yield "guide", build_circular_guide(0.3, -2.0, 2.0, ("min", "max"), 4, 3, 6, WindowParams(1.0))
    yield "terminated", build_circular_guide(0.3, -2.0, 0.0, ("min",), 2, 4, 6, WindowParams(1.0))
    yield "bend", build_bend(0.3, 1.5, 1.0, 6)


@pytest.mark.parametrize("name,mesh", list(_meshes()))
def test_nodes_normals_weights(name, mesh):
    assert np.all(mesh.jac > 0)
    assert np.all(mesh.weights > 0)
    assert np.abs(np.linalg.norm(mesh.normals, axis=1) - 1).max() < 1e-12
    assert np.abs(np.einsum("nk,nk->n", mesh.normals, mesh.e1)).max() < 1e-12
    assert np.all((mesh.window >= 0) & (mesh.window <= 1))


@pytest.mark.parametrize("name,mesh", list(_meshes()))
def test_patches_are_watertight(name, mesh):
    ok, open_edges, worst = watertight_audit(mesh)
    assert worst < 1e-12
    if name in ("sphere", "capsule"):
        assert ok
    else:
        # only the open SIW ends may be unmatched, and they are circles at the mesh ends
        z = np.array([mesh.patches[p].point(np.zeros(1), np.zeros(1))[0] for p, _, _ in open_edges])
        assert len(open_edges) > 0 and len(z) == len(open_edges)


@pytest.mark.parametrize("name,mesh", list(_meshes()))
def test_outward_normals(name, mesh):
    """Points slightly along the normal lie outside, slightly against it inside."""
    h = 1e-3
    assert not mesh.inside(mesh.points + h * mesh.normals).any()
    assert mesh.inside(mesh.points - h * mesh.normals).all()


def test_sphere_area_spectral():
    for n in (6, 8, 10):
        a1 = build_sphere(1.0, 1, n).area()
        a2 = build_sphere(1.0, 1, n + 4).area()
        assert abs(a2 - a1) < 10.0 ** (-n / 2)
    assert abs(build_sphere(1.0, 1, 16).area() - 4 * np.pi) < 1e-9


def test_sphere_has_no_siws():
    m = build_sphere(1.0, 1, 6)
    assert m.siws == [] and np.all(m.window == 1.0) and np.all(m.siw == 0)


def test_guide_window_validation():
    with pytest.raises(GeometryConfigurationError):
        build_circular_guide(0.3, -1.0, 1.0, ("min", "max"), 2, 3, 6, WindowParams(1.5))
    with pytest.raises(GeometryConfigurationError):
        build_circular_guide(0.3, -1.0, 0.0, ("min",), 2, 3, 6)
    with pytest.raises(GeometryConfigurationError):
        build_circular_guide(-0.3, -1.0, 0.0)
    with pytest.raises(GeometryConfigurationError):
        build_bend(0.3, 0.2, 1.0)


def test_guide_siws_and_window_end():
    A = 1.0
    m = build_circular_guide(0.3, -2.0, 2.0, ("min", "max"), 4, 3, 6, WindowParams(A))
    assert [tuple(s.c) for s in m.siws] == [(0.0, 0.0, -1.0), (0.0, 0.0, 1.0)]
    assert np.allclose([s.o[2] for s in m.siws], [-1.0, 1.0])
    centre = np.abs(m.points[:, 2]) < 1.0
    assert np.all(m.window[centre] == 1.0)


def test_gamma_perp_disc():
    m = build_circular_guide(0.3, -2.0, 2.0, ("min", "max"), 4, 3, 6, WindowParams(1.0))
    siw = m.siws[0]
    gp = build_gamma_perp(siw, 1.0, 4.0, 0.3, degree=8)
    assert np.abs(gp.normals - siw.c).max() < 1e-12
    assert np.allclose(siw.axial(gp.points), 1.0)
    assert gp.cut_position == 1.0
    assert abs(gp.area() / (np.pi * gp.R_max**2) - 1) < 1e-10
    rho = siw.transverse(gp.points)
    assert np.all((rho < 0.3) == (gp.region == "i"))
    with pytest.raises(GeometryConfigurationError, match="R_max >="):
        build_gamma_perp(siw, 1.0, 1.0, 0.3, decay_rate=3.0)


def test_ring_radii_nested():
    r1 = disc_ring_radii(0.3, 4.0)
    r2 = disc_ring_radii(0.3, 8.0)
    assert np.array_equal(r2[: r1.size], r1)
    assert r1[-1] >= 4.0 and r1[-2] < 4.0


def test_dump_csv(tmp_path):
    m = build_circular_guide(0.3, -2.0, 2.0, ("min", "max"), 4, 3, 4, WindowParams(1.0))
    path = tmp_path / "mesh.csv"
    m.dump_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["patch", "u", "v", "x", "y", "z", "nx", "ny", "nz", "weight", "W_A", "siw"]
    assert len(rows) == m.size + 1
    data = np.array(rows[1:], dtype=float)
    assert np.allclose(data[:, 3:6], m.points) and np.allclose(data[:, 10], m.window)
