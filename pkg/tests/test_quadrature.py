import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgf3d import quadrature as quad
from wgf3d.geometry import PlanePatch, SurfaceMesh, build_capsule, build_sphere
from wgf3d.kernels import DoubleLayerLaplace, GreenKernels
from wgf3d.nearfield import NearParams, Targets, assemble


@pytest.mark.parametrize("n", [2, 5, 12, 17])
def test_fejer_exactness_and_positivity(n):
    x, w = quad.fejer_rule(n)
    assert np.all(w > 0)
    for deg in range(n):
        exact = (1 - (-1) ** (deg + 1)) / (deg + 1)
        assert abs(w @ x**deg - exact) < 1e-13


@given(st.integers(4, 20), st.floats(-1, 1))
@settings(max_examples=40, deadline=None)
def test_interpolation_reproduces_polynomials(n, t):
    x = quad.cheb_nodes(n)
    c = np.arange(1, n + 1, dtype=float) / n
    p = np.polynomial.Polynomial(c[: n])   # degree n - 1
    assert abs(quad.interp_matrix(n, [t])[0] @ p(x) - p(t)) < 1e-11


def test_diff_matrix():
    n = 14
    x = quad.cheb_nodes(n)
    D = quad.diff_matrix(n)
    assert np.abs(D @ np.sin(x) - np.cos(x)).max() < 1e-10


def test_interp_domain_error():
    with pytest.raises(quad.QuadratureDomainError):
        quad.interp_matrix(6, [1.5])


def _flat_exact(x0, y0, h=0.5):
    """Closed form of int over [-h,h]^2 of 1/(4 pi |r - r0|) for r0 in the plane."""
    def F(x, y):
        r = np.hypot(x, y)
        return x * np.log(y + r) + y * np.log(x + r)

    xs, ys = (-h - x0, h - x0), (-h - y0, h - y0)
    tot = F(xs[1], ys[1]) - F(xs[0], ys[1]) - F(xs[1], ys[0]) + F(xs[0], ys[0])
    return tot / (4 * np.pi)


def test_planar_single_layer_oracle():
    mesh = SurfaceMesh([PlanePatch(np.zeros(3), np.array([0.5, 0, 0]), np.array([0, 0.5, 0]))], 12)
    M = assemble(mesh, Targets.from_mesh(mesh), GreenKernels(0.0))
    approx = M[0].real.sum(axis=1)
    exact = _flat_exact(mesh.points[:, 0], mesh.points[:, 1])
    assert np.abs(approx - exact).max() < 1e-10


def test_gauss_identity_sphere():
    m = build_sphere(1.0, 1, 10)
    D = assemble(m, Targets.from_mesh(m), DoubleLayerLaplace())
    assert np.abs(D[0].sum(axis=1) - 0.5).max() < 1e-8


def test_polar_rule_refinement_stable():
    m = build_sphere(1.0, 1, 8)
    T = Targets.from_mesh(m)
    a = assemble(m, T, GreenKernels(0.0), NearParams())[0].sum(axis=1)
    b = assemble(m, T, GreenKernels(0.0), NearParams(n_rad=2 * NearParams().n_rad,
                                                     n_ang=2 * NearParams().n_ang))[0].sum(axis=1)
    assert np.abs(a - b).max() < 1e-9


def test_capsule_single_layer_positive():
    m = build_capsule(0.3, 1.0, 8)
    M = assemble(m, Targets.from_mesh(m), GreenKernels(0.0))
    assert np.all(M[0].real.sum(axis=1) > 0)
