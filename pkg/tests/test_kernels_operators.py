import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import curl_fd
from wgf3d.excitation import Dipole
from wgf3d.geometry import build_sphere
from wgf3d.kernels import Material, SingularityError, green, grad_green
from wgf3d.operators import (MaterialPair, NearSurfaceError, PotentialEvaluator, delta_ops, potential_A)

vec = st.lists(st.floats(-2, 2), min_size=3, max_size=3).map(np.array)


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_material_wavenumber(eps, mu):
    m = Material(eps, mu)
    assert abs(m.k - 2 * np.pi * np.sqrt(eps * mu)) < 1e-14 * abs(m.k)
    lossy = Material(complex(eps, 0.3), mu)
    assert np.imag(lossy.k) >= 0


def test_material_from_index():
    assert Material.from_index(1.47).epsilon == pytest.approx(1.47**2)


@given(vec, vec)
@settings(max_examples=40)
def test_green_symmetric_and_gradient(r, rp):
    if np.linalg.norm(r - rp) < 0.1:
        return
    k = 2 * np.pi * 1.3
    assert green(k, r, rp) == pytest.approx(green(k, rp, r), rel=1e-14)
    h = 1e-6
    fd = np.array([(green(k, r + h * e, rp) - green(k, r - h * e, rp)) / (2 * h) for e in np.eye(3)])
    assert np.abs(fd - grad_green(k, r, rp)).max() < 1e-6 * max(1.0, np.abs(fd).max())


def test_green_rejects_coincident_points():
    with pytest.raises(SingularityError):
        green(1.0, np.zeros(3), np.zeros(3))


@pytest.fixture(scope="module")
def sphere():
    return build_sphere(0.5, 2, 12)


def _smooth_tangential(mesh):
    x, y, z = mesh.points.T
    f = np.stack([np.sin(2 * x) + z, np.cos(3 * y), x * y - z * z], axis=1)
    return np.cross(mesh.normals, f).astype(complex)


def test_zero_contrast_operators_vanish():
    sphere = build_sphere(0.5, 1, 8)
    mp = MaterialPair(Material(2.0), Material(2.0))
    rng = np.random.default_rng(0)
    a = np.cross(sphere.normals, rng.normal(size=sphere.points.shape)).astype(complex)
    for kind in ("eps", "mu"):
        d = delta_ops(mp, sphere, a, kind)
        assert np.abs(d["R"]).max() < 1e-12 and np.abs(d["K"]).max() < 1e-12


def test_null_field_of_exterior_dipole(sphere):
    """Traces of a field regular inside reproduce it inside and give zero outside."""
    mat = Material(1.47**2, 1.0)
    dip = Dipole((0.2, 0.1, 1.4), (1.0, 0.5, -0.3))
    E, H = dip.fields(sphere.points, mat)
    n = sphere.normals
    m, j = -np.cross(n, E), -np.cross(n, H)
    rng = np.random.default_rng(3)
    u = rng.normal(size=(12, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    out = u * 1.0
    out = out[np.linalg.norm(out - dip.location, axis=1) > 0.5]
    Eo, Ho = PotentialEvaluator(sphere, mat.k, out).field(m, j, mat)
    Ed, _ = dip.fields(out, mat)
    assert np.abs(Eo).max() / np.abs(Ed).max() < 1e-6
    inn = u * 0.2
    Ei, Hi = PotentialEvaluator(sphere, mat.k, inn).field(m, j, mat)
    Er, Hr = dip.fields(inn, mat)
    assert np.abs(Ei - Er).max() / np.abs(Er).max() < 1e-6
    assert np.abs(Hi - Hr).max() / np.abs(Hr).max() < 1e-6


def test_curl_of_A_equals_B(sphere):
    k = 2 * np.pi
    a = _smooth_tangential(sphere)
    p = np.array([0.3, -0.2, 1.1])
    h = 1e-3
    A = lambda q: PotentialEvaluator(sphere, k, q[None]).A(a)[0]
    B = PotentialEvaluator(sphere, k, p[None]).B(a)[0]
    assert np.abs(curl_fd(A, p, h) - B).max() < 1e-6 * np.abs(B).max()


def test_potentials_refuse_near_targets(sphere):
    a = np.cross(sphere.normals, np.ones(3)).astype(complex)
    with pytest.raises(NearSurfaceError):
        potential_A(2 * np.pi, sphere, a, np.array([[0.0, 0.0, 0.501]]))
