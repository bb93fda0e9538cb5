"""Helmholtz Green function and the kernel families assembled into matrices.

Kernel families are callables ``kern(tgt, src) -> (K, nt, ns)`` where
``tgt`` and ``src`` are dicts of ``(nt, 3)`` / ``(ns, 3)`` arrays with keys
``x`` (positions), and for surface points ``n``, ``e1``, ``e2`` (normal and
orthonormal tangent frame).  Each of the ``K`` outputs multiplies one scalar
nodal field of the source, so frame components of tangential densities and
Cartesian components are treated alike by the quadrature layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularityError(ValueError):
    """Raised when the Green function is evaluated at coincident points."""


@dataclass(frozen=True)
class Material:
    """Homogeneous medium with relative permittivity and permeability.

    Lengths are in vacuum wavelengths, so with ``c = 1`` the angular
    frequency is ``omega = 2 pi`` and ``k = omega sqrt(eps mu)``.
    """

    epsilon: complex = 1.0
    mu: complex = 1.0
    omega: float = 2 * np.pi

    def __post_init__(self):
        if np.imag(self.k) < -1e-14:
            raise ValueError("material gives a wavenumber with negative imaginary part")

    @property
    def k(self) -> complex:
        k = self.omega * np.sqrt(complex(self.epsilon) * complex(self.mu))
        if np.imag(k) < 0:
            k = -k
        return complex(k) if np.imag(k) != 0 else float(np.real(k))

    @property
    def index(self) -> complex:
        return np.sqrt(complex(self.epsilon) * complex(self.mu))

    @classmethod
    def from_index(cls, n: float, omega: float = 2 * np.pi) -> "Material":
        return cls(epsilon=n * n, mu=1.0, omega=omega)


def green(k, r, rp):
    """Free-space Helmholtz Green function ``exp(ik R) / (4 pi R)``."""
    d = np.asarray(r, dtype=float) - np.asarray(rp, dtype=float)
    R = np.linalg.norm(d, axis=-1)
    if np.any(R == 0):
        raise SingularityError("green evaluated at coincident points")
    out = np.exp(1j * k * R) / (4 * np.pi * R)
    return complex(out) if np.ndim(out) == 0 else out


def grad_green(k, r, rp):
    """Gradient of the Green function with respect to the target ``r``."""
    d = np.asarray(r, dtype=float) - np.asarray(rp, dtype=float)
    R = np.linalg.norm(d, axis=-1)
    if np.any(R == 0):
        raise SingularityError("grad_green evaluated at coincident points")
    G = np.exp(1j * k * R) / (4 * np.pi * R)
    f = (1j * k - 1.0 / R) * G / R
    return f[..., None] * d


def _pair(tgt, src):
    d = tgt["x"][:, None, :] - src["x"][None, :, :]
    R = np.sqrt(np.einsum("tsk,tsk->ts", d, d))
    return d, R


def _gparts(k, R):
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / R
        G = np.exp(1j * k * R) * (inv / (4 * np.pi))
        f = (1j * k - inv) * G * inv
    return G, f


def _quiet(fn):
    """Ignore the NaN produced at coincident points; those entries are replaced by singular rules."""

    def wrapped(self, tgt, src):
        with np.errstate(divide="ignore", invalid="ignore"):
            return fn(self, tgt, src)

    wrapped.__doc__ = fn.__doc__
    return wrapped


def _dot(a, b):
    return np.einsum("tsk,tsk->ts", a, b)


class GreenKernels:
    """``G`` and ``grad_t G`` (components x, y, z): four kernels for off-surface potentials."""

    K = 4

    def __init__(self, k):
        self.k = k

    @_quiet
    def __call__(self, tgt, src):
        d, R = _pair(tgt, src)
        G, f = _gparts(self.k, R)
        out = np.empty((4,) + R.shape, dtype=complex)
        out[0] = G
        out[1:] = np.moveaxis(f[..., None] * d, -1, 0)
        return out


class SingleKernels:
    """Single-wavenumber on-surface kernels: ``G`` and the four frame components of ``R``.

    ``R[c, b](t, y) = -e_c(t) . (n_t x (grad G x e_b(y)))`` is stored at
    indices ``1 + 2c + b``.
    """

    K = 5

    def __init__(self, k):
        self.k = k

    @_quiet
    def __call__(self, tgt, src):
        d, R = _pair(tgt, src)
        G, f = _gparts(self.k, R)
        out = np.empty((5,) + R.shape, dtype=complex)
        out[0] = G
        _fill_R(out, 1, f, d, tgt, src)
        return out


def _fill_R(out, start, f, d, tgt, src):
    nt = tgt["n"][:, None, :]
    nd = f * _dot(np.broadcast_to(nt, d.shape), d)
    for c, ec in enumerate((tgt["e1"], tgt["e2"])):
        ecd = f * np.einsum("tk,tsk->ts", ec, d)
        for b, eb in enumerate((src["e1"], src["e2"])):
            ntb = tgt["n"] @ eb.T
            ecb = ec @ eb.T
            out[start + 2 * c + b] = -(ecd * ntb - ecb * nd)


class MullerKernels:
    """Kernels of the weakly singular two-medium combinations.

    Layout (11 kernels):

    * 0-3: ``R_e[c, b]`` frame components for wavenumber ``k_e``
    * 4-7: ``R_i[c, b]`` for ``k_i``
    * 8-9: ``e_c(t) . (-n_t x (grad G_e - grad G_i))`` acting on ``div a``
    * 10: ``k_e^2 G_e - k_i^2 G_i`` acting on Cartesian components of ``a``
    """

    K = 11

    def __init__(self, ke, ki):
        self.ke = ke
        self.ki = ki

    @_quiet
    def __call__(self, tgt, src):
        d, R = _pair(tgt, src)
        Ge, fe = _gparts(self.ke, R)
        Gi, fi = _gparts(self.ki, R)
        out = np.empty((11,) + R.shape, dtype=complex)
        _fill_R(out, 0, fe, d, tgt, src)
        _fill_R(out, 4, fi, d, tgt, src)
        df = fe - fi
        # -e1 . (n x D) = D . e2 ; -e2 . (n x D) = -D . e1
        out[8] = df * np.einsum("tk,tsk->ts", tgt["e2"], d)
        out[9] = -df * np.einsum("tk,tsk->ts", tgt["e1"], d)
        out[10] = self.ke**2 * Ge - self.ki**2 * Gi
        return out


class DoubleLayerLaplace:
    """``n(y) . grad_t (1 / (4 pi |t - y|))``, the kernel of the Gauss identity.

    With outward normals its integral is ``+1/2`` at smooth surface points.
    """

    K = 1

    @_quiet
    def __call__(self, tgt, src):
        d, R = _pair(tgt, src)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = -np.einsum("sk,tsk->ts", src["n"], d) / (4 * np.pi * R**3)
        return val[None]
