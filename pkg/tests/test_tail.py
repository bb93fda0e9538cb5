import numpy as np
import pytest

from wgf3d.excitation import BoundMode
from wgf3d.geometry import build_circular_guide, build_gamma_perp
from wgf3d.muller import perp_data, perp_potentials
from wgf3d.tail import build_tail, tail_potentials
from wgf3d.windowing import WindowParams


@pytest.fixture(scope="module")
def guide(he11):
    A = 3 * he11.wavelength
    mesh = build_circular_guide(he11.radius, -A, A, axial_patches=6, azimuthal_patches=3, degree=8,
                                window=WindowParams(A))
    return mesh, BoundMode(he11, mesh.siws[0]), A


def test_tail_mesh_follows_siw(guide):
    mesh, exc, A = guide
    tail = build_tail(exc, A, 5.0, degree=6)
    s = exc.siw.axial(tail.points)
    assert s.min() > A and s.max() < A + 5.0
    assert np.allclose(exc.siw.transverse(tail.points), exc.siw.size())
    rel = tail.points - exc.siw.o
    radial = rel - np.outer(rel @ exc.siw.c, exc.siw.c)
    assert np.all(np.einsum("nk,nk->n", tail.normals, radial) > 0)


@pytest.mark.slow
def test_disc_replaces_long_tail(guide, glass):
    """With a tail long compared with the exterior net wavelength the disc identity holds to 1e-5."""
    mesh, exc, A = guide
    P = mesh.points[np.random.default_rng(7).choice(mesh.size, 10, replace=False)]
    gp = build_gamma_perp(exc.siw, A, 8.0, exc.siw.size(), degree=12, decay_rate=exc.mode.decay_rate)
    F = perp_potentials(perp_data(exc, gp), glass, P)
    T = tail_potentials(exc, glass, P, A, length=240.0)
    for side in "ie":
        for q in (0, 1):
            assert np.abs(T[side][q] + F[side][q]).max() / np.abs(F[side][q]).max() < 1e-5
