import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wgf3d.geometry import build_circular_guide
from wgf3d.windowing import (SIWConfigurationError, SIWDescriptor, WindowDomainError, WindowParams, eval_W,
                             eval_w, incident_extent, siw_labels)

sizes = st.floats(0.5, 1e3)
alphas = st.floats(0.05, 0.95)


@given(sizes, alphas, st.floats(-3.0, 3.0))
def test_window_range_plateau_support(A, alpha, t):
    p = WindowParams(A, alpha)
    d = t * A
    w = eval_w(d, p)
    assert 0.0 <= w <= 1.0
    if abs(d) <= alpha * A:
        assert w == 1.0
    if abs(d) >= A:
        assert w == 0.0


@given(sizes, alphas, st.floats(-2.0, 2.0))
def test_window_is_even(A, alpha, t):
    p = WindowParams(A, alpha)
    assert eval_w(t * A, p) == eval_w(-t * A, p)


@given(sizes, alphas)
def test_window_monotone_on_rise(A, alpha):
    p = WindowParams(A, alpha)
    d = np.linspace(alpha * A, A, 1000)
    assert np.all(np.diff(eval_w(d, p)) <= 0.0)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("A", [1.0, 10.0, 300.0])
def test_window_boundary_derivatives_vanish(A, alpha):
    p = WindowParams(A, alpha)
    h = 1e-4 * A
    k = np.arange(-3, 4)
    for d0 in (alpha * A, A):
        f = eval_w(d0 + k * h, p)
        d1 = (f[4] - f[2]) / (2 * h)
        d2 = (f[4] - 2 * f[3] + f[2]) / h**2
        d3 = (f[5] - 2 * f[4] + 2 * f[2] - f[1]) / (2 * h**3)
        assert max(abs(d1), abs(d2), abs(d3)) < 1e-6


def test_window_params_validation():
    for bad in (dict(A=0.0), dict(A=-1.0), dict(A=np.inf), dict(A=1.0, alpha=0.0), dict(A=1.0, alpha=1.0),
                dict(A=1.0, eta=-1e-3)):
        with pytest.raises(WindowDomainError):
            WindowParams(**bad)
    with pytest.raises(WindowDomainError):
        eval_w(np.nan, WindowParams(1.0))


def test_siw_axis_and_cross_section_checks():
    with pytest.raises(SIWConfigurationError):
        SIWDescriptor((0, 0, 0), (0, 0, 1.001))
    with pytest.raises(SIWConfigurationError):
        SIWDescriptor((0, 0, 0), (0, 0, 1), {"kind": "circular", "radius": 0.0})
    with pytest.raises(SIWConfigurationError):
        SIWDescriptor((0, 0, 0), (0, 0, 1), {"kind": "hexagonal"})
    s = SIWDescriptor((0, 0, 0), (0, 0, -1), {"kind": "rectangular", "width": 2.0, "height": 1.0})
    e1, e2 = s.frame()
    assert np.allclose(np.cross(e1, e2), -s.c)


def test_overlapping_siws_rejected():
    a = SIWDescriptor((0, 0, 0), (0, 0, 1), label=1)
    b = SIWDescriptor((0, 0, 1), (0, 0, 1), label=2)
    with pytest.raises(SIWConfigurationError):
        siw_labels(np.array([[0.0, 0.0, 2.0]]), [a, b])


def test_surface_window_is_one_off_the_siws():
    p = WindowParams(2.0)
    mesh = build_circular_guide(0.3, -6.0, 6.0, ("min", "max"), 6, 3, 6, p)
    off = mesh.siw == 0
    assert off.any() and np.all(mesh.window[off] == 1.0)
    assert np.all((mesh.window >= 0) & (mesh.window <= 1))
    direct = eval_W(mesh.points, mesh.siws, p)
    assert np.array_equal(direct, mesh.window)
    # the window vanishes at the open ends
    z = mesh.points[:, 2]
    assert np.all(mesh.window[np.abs(z) > 6.0 - 0.02] < 1e-12)


def test_incident_extent():
    p = WindowParams(2.0)
    s = SIWDescriptor((0, 0, 0), (0, 0, -1), {"kind": "circular", "radius": 0.3})
    pts = np.array([[0.3, 0, -5.0], [0.3, 0, 0.5], [0.3, 0, 1.5], [0.3, 0, 2.5], [2.0, 0, -5.0]])
    chi = incident_extent(pts, s, p)
    assert chi[0] == 1.0 and chi[1] == 1.0
    assert 0.0 < chi[2] < 1.0
    assert chi[3] == 0.0 and chi[4] == 0.0
