import numpy as np

from wgf3d.kernels import Material
from wgf3d.mie import MieSphere

EXT, INN = Material(1.0, 1.0), Material(1.47**2, 1.0)


def _unit(n, seed):
    u = np.random.default_rng(seed).normal(size=(n, 3))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def test_plane_wave_expansion():
    s = MieSphere(0.5, EXT, INN)
    x = _unit(40, 0) * 0.9
    E, H = s.incident(x)
    phase = np.exp(1j * EXT.k * x[:, 2])
    assert np.abs(E[:, 0] - phase).max() < 1e-12 and np.abs(E[:, 1:]).max() < 1e-12
    assert np.abs(H[:, 1] - phase * EXT.k / EXT.omega).max() < 1e-12


def test_interface_conditions():
    s = MieSphere(0.5, EXT, INN)
    u = _unit(40, 1)
    Eo, Ho = s.total(u * 0.5 * (1 + 1e-12))
    Ei, Hi = s.total(u * 0.5 * (1 - 1e-12))
    assert np.abs(np.cross(u, Eo - Ei)).max() < 1e-9
    assert np.abs(np.cross(u, Ho - Hi)).max() < 1e-9
    assert np.abs(np.sum(u * (Eo - INN.epsilon * Ei), axis=1)).max() < 1e-9


def test_matched_sphere_does_not_scatter():
    s = MieSphere(0.5, EXT, Material(1.0, 1.0))
    Es, Hs = s.scattered(_unit(10, 2) * 1.5)
    assert np.abs(Es).max() < 1e-13 and np.abs(Hs).max() < 1e-13


def test_scattered_field_is_outgoing():
    s = MieSphere(0.5, EXT, INN)
    d = np.array([[0.3, 0.4, 0.866]])
    d /= np.linalg.norm(d)
    r1, r2 = 40.0, 80.0
    E1, _ = s.scattered(r1 * d)
    E2, _ = s.scattered(r2 * d)
    ratio = (E2 * r2 / np.exp(1j * EXT.k * r2)) / (E1 * r1 / np.exp(1j * EXT.k * r1))
    assert np.abs(ratio[0, np.abs(E1[0]) > 1e-3 * np.abs(E1).max()] - 1).max() < 5e-2
