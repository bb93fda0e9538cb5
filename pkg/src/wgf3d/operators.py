"""Vector potentials, boundary operators and the two-medium Müller combinations.

Tangential densities are passed either as Cartesian samples ``(N, 3)`` or,
for the dense tables, as frame components ``(N, 2)`` in the mesh frame
``(e1, e2)``.  All operators are Nyström discretizations built on
:func:`wgf3d.nearfield.assemble`.

Conventions (``n`` is the mesh normal):

* ``A[a](r) = curl int G a``, ``B[a](r) = k^2 int G a + grad int G div a``;
* ``S[a] = -n x int G a``, ``R[a] = -n x curl int G a`` (principal value),
  ``T[a] = -n x grad int G div a``;
* ``R^D_alpha = c (alpha_e R_e - alpha_i R_i)`` and
  ``K^D_alpha = (2i / (omega (alpha_e + alpha_i))) [(T_e - T_i) + (k_e^2 S_e - k_i^2 S_i)]``
  with ``c = 2 / (alpha_e + alpha_i)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .kernels import GreenKernels, Material, MullerKernels, SingleKernels
from .nearfield import NearParams, Targets, assemble, surface_distance

log = logging.getLogger(__name__)


class OperatorStateError(RuntimeError):
    """Raised when precomputed tables do not match the requested operator."""


class NearSurfaceError(ValueError):
    """Raised when a potential is requested too close to the surface."""


def _cross_n(n, a):
    return np.cross(n, a)


# ----------------------------------------------------------------------------
# off-surface potentials
# ----------------------------------------------------------------------------


class PotentialEvaluator:
    """Dense evaluation of ``A`` and ``B`` from one mesh to fixed target points.

    Parameters
    ----------
    mesh : SurfaceMesh
        Source surface.
    k : complex
        Wavenumber.
    points : ndarray, shape (T, 3)
        Targets, off the surface.
    params : NearParams, optional
        Near-field quadrature controls; targets close to the surface get
        corrected rows.
    dtype : numpy dtype
        Storage type of the tables.
    """

    def __init__(self, mesh, k, points, params: NearParams | None = None, dtype=complex):
        self.mesh = mesh
        self.k = k
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.M = assemble(mesh, Targets(self.points), GreenKernels(k), params, dtype=dtype)

    def _check(self, a):
        a = np.asarray(a)
        if a.shape[0] != self.mesh.size or a.shape[1] != 3:
            raise OperatorStateError(f"density of shape {a.shape} does not match mesh with {self.mesh.size} nodes")
        return a

    def single(self, a):
        """``int G a`` for Cartesian densities ``(N, 3)``."""
        return self.M[0] @ self._check(a)

    def A(self, a):
        """``curl int G a`` at the targets, shape ``(T, 3)``."""
        a = self._check(a)
        gx, gy, gz = self.M[1], self.M[2], self.M[3]
        ax, ay, az = a[:, 0], a[:, 1], a[:, 2]
        return np.stack([gy @ az - gz @ ay, gz @ ax - gx @ az, gx @ ay - gy @ ax], axis=1)

    def B(self, a, div=None):
        """``k^2 int G a + grad int G div a`` at the targets, shape ``(T, 3)``."""
        a = self._check(a)
        if div is None:
            div = self.mesh.surface_div(a)
        gd = np.stack([self.M[1] @ div, self.M[2] @ div, self.M[3] @ div], axis=1)
        return self.k**2 * (self.M[0] @ a) + gd

    def field(self, m, j, material: Material, div_m=None, div_j=None):
        """``(E, H) = (A[m] + (i/(omega eps)) B[j], A[j] - (i/(omega mu)) B[m])``."""
        w = material.omega
        E = self.A(m) + (1j / (w * material.epsilon)) * self.B(j, div_j)
        H = self.A(j) - (1j / (w * material.mu)) * self.B(m, div_m)
        return E, H


def _check_clearance(mesh, points, factor):
    dist, diam = surface_distance(mesh, points)
    bad = dist < factor * diam
    if np.any(bad):
        raise NearSurfaceError(
            f"{int(bad.sum())} target(s) closer than {factor:g} patch diameters to the surface; "
            "use boundary_ops for on-surface values"
        )


def potential_A(k, mesh, a, r_target, params: NearParams | None = None, clearance: float = 0.15):
    """``A[a] = curl int_Gamma G a dsigma`` at off-surface targets.

    Parameters
    ----------
    k : complex
        Wavenumber.
    mesh : SurfaceMesh
    a : ndarray, shape (N, 3)
        Tangential density.
    r_target : ndarray, shape (T, 3)
    clearance : float
        Minimum target distance in units of the closest patch diameter.

    Raises
    ------
    NearSurfaceError
        If a target lies inside the excluded near zone.
    """
    _check_clearance(mesh, r_target, clearance)
    return PotentialEvaluator(mesh, k, r_target, params).A(a)


def potential_B(k, mesh, a, r_target, params: NearParams | None = None, clearance: float = 0.15):
    """``B[a] = k^2 int G a + grad int G div_Gamma a`` at off-surface targets."""
    _check_clearance(mesh, r_target, clearance)
    return PotentialEvaluator(mesh, k, r_target, params).B(a)


# ----------------------------------------------------------------------------
# single-wavenumber boundary operators
# ----------------------------------------------------------------------------


class BoundaryTables:
    """On-surface tables of ``G`` and the frame components of ``R`` for one wavenumber."""

    def __init__(self, mesh, k, params: NearParams | None = None):
        self.mesh = mesh
        self.k = k
        self.M = assemble(mesh, Targets.from_mesh(mesh), SingleKernels(k), params)

    def S(self, a):
        return -_cross_n(self.mesh.normals, self.M[0] @ a)

    def R(self, a):
        af = self.mesh.to_frame(a)
        out = np.empty_like(af, dtype=complex)
        for c in range(2):
            out[:, c] = self.M[1 + 2 * c] @ af[:, 0] + self.M[2 + 2 * c] @ af[:, 1]
        return self.mesh.from_frame(out)

    def T(self, a):
        phi = self.M[0] @ self.mesh.surface_div(a)
        return -_cross_n(self.mesh.normals, self.mesh.surface_grad(phi))


def boundary_ops(k, mesh, a, tables: BoundaryTables | None = None, params: NearParams | None = None) -> dict:
    """Boundary operators ``S``, ``R`` (principal value) and ``T`` applied to ``a``.

    Parameters
    ----------
    k : complex
    mesh : SurfaceMesh
    a : ndarray, shape (N, 3)
        Tangential density.
    tables : BoundaryTables, optional
        Precomputed tables; built on demand when absent.

    Returns
    -------
    dict with keys ``"S"``, ``"R"``, ``"T"``, each of shape ``(N, 3)``.

    Raises
    ------
    OperatorStateError
        If ``tables`` belongs to another mesh or wavenumber.
    """
    if tables is None:
        tables = BoundaryTables(mesh, k, params)
    elif tables.mesh is not mesh or tables.k != k:
        raise OperatorStateError("boundary tables were built for a different mesh or wavenumber")
    a = np.asarray(a)
    return {"S": tables.S(a), "R": tables.R(a), "T": tables.T(a)}


# ----------------------------------------------------------------------------
# Müller combinations
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MaterialPair:
    """Exterior (cladding) and interior (core) media sharing one frequency."""

    exterior: Material
    interior: Material

    def __post_init__(self):
        if not np.isclose(self.exterior.omega, self.interior.omega, rtol=0, atol=1e-14):
            raise ValueError("exterior and interior materials must share omega")

    @property
    def omega(self) -> float:
        return self.exterior.omega

    def pair(self, kind: str):
        if kind == "eps":
            return complex(self.exterior.epsilon), complex(self.interior.epsilon)
        if kind == "mu":
            return complex(self.exterior.mu), complex(self.interior.mu)
        raise ValueError(f"alpha_kind must be 'eps' or 'mu', got {kind!r}")

    def coefficients(self, kind: str):
        """``(c, K-prefactor, alpha_e, alpha_i)`` of the combination for ``kind``."""
        ae, ai = self.pair(kind)
        s = ae + ai
        if s == 0:
            raise ZeroDivisionError(f"alpha_e + alpha_i vanishes for {kind}")
        return 2.0 / s, 2j / (self.omega * s), ae, ai


class MullerTables:
    """Dense tables of the weakly singular two-medium kernels on one mesh.

    The eleven stored matrices are the frame blocks of ``R_e`` and ``R_i``,
    the frame components of ``-n x grad (G_e - G_i)`` acting on ``div a`` and
    ``k_e^2 G_e - k_i^2 G_i`` acting on Cartesian components.

    Parameters
    ----------
    mesh : SurfaceMesh
    materials : MaterialPair
    params : NearParams, optional
    dtype : numpy dtype
        ``complex`` (default) or ``complex64`` to halve the storage.
    """

    def __init__(self, mesh, materials: MaterialPair, params: NearParams | None = None, dtype=complex):
        self.mesh = mesh
        self.materials = materials
        self.stats = {}
        ke, ki = materials.exterior.k, materials.interior.k
        self.M = assemble(mesh, Targets.from_mesh(mesh), MullerKernels(ke, ki), params, self.stats, dtype=dtype)
        log.info("Müller tables: N=%d, %.0f MiB, %s", mesh.size, self.M.nbytes / 2**20, self.stats)

    @property
    def size(self) -> int:
        return self.mesh.size

    def _mm(self, k, x):
        return self.M[k] @ x.astype(self.M.dtype, copy=False)

    def R_frame(self, side: str, af):
        """``R_side`` applied to frame components ``af`` of shape ``(N, 2)`` or ``(N, 2, m)``."""
        base = {"e": 0, "i": 4}[side]
        out = np.empty(af.shape, dtype=complex)
        for c in range(2):
            out[:, c] = self._mm(base + 2 * c, af[:, 0]) + self._mm(base + 2 * c + 1, af[:, 1])
        return out

    def K_parts(self, a_cart, div):
        """Bracket ``[(T_e - T_i) + (k_e^2 S_e - k_i^2 S_i)] a`` in frame components.

        Parameters
        ----------
        a_cart : ndarray, shape (N, 3) or (N, 3, m)
        div : ndarray, shape (N,) or (N, m)
        """
        e1, e2 = self.mesh.e1, self.mesh.e2
        V = np.stack([self._mm(10, a_cart[:, q]) for q in range(3)], axis=1)
        if V.ndim == 2:
            s1 = np.einsum("nk,nk->n", V, e2)
            s2 = -np.einsum("nk,nk->n", V, e1)
        else:
            s1 = np.einsum("nkm,nk->nm", V, e2)
            s2 = -np.einsum("nkm,nk->nm", V, e1)
        t1 = self._mm(8, div)
        t2 = self._mm(9, div)
        return np.stack([t1 + s1, t2 + s2], axis=1)

    def delta(self, kind: str, af, a_cart=None, div=None):
        """``(R^D_kind a, K^D_kind a)`` in frame components for frame density ``af``."""
        c, ck, ae, ai = self.materials.coefficients(kind)
        if a_cart is None:
            a_cart = _frame_to_cart(self.mesh, af)
        if div is None:
            div = _div_any(self.mesh, a_cart)
        re = self.R_frame("e", af)
        ri = self.R_frame("i", af)
        return c * (ae * re - ai * ri), ck * self.K_parts(a_cart, div)


def _frame_to_cart(mesh, af):
    if af.ndim == 2:
        return mesh.from_frame(af)
    return af[:, 0:1, :] * mesh.e1[:, :, None] + af[:, 1:2, :] * mesh.e2[:, :, None]


def _div_any(mesh, a_cart):
    if a_cart.ndim == 2:
        return mesh.surface_div(a_cart)
    return np.stack([mesh.surface_div(a_cart[:, :, q]) for q in range(a_cart.shape[2])], axis=1)


def delta_ops(materials: MaterialPair, mesh, a, alpha_kind: str, window: bool = False,
              tables: MullerTables | None = None, params: NearParams | None = None) -> dict:
    """Weakly singular combinations ``R^D_alpha`` and ``K^D_alpha`` applied to ``a``.

    Parameters
    ----------
    materials : MaterialPair
    mesh : SurfaceMesh
    a : ndarray, shape (N, 3)
        Tangential density (Cartesian).
    alpha_kind : {"eps", "mu"}
        Material parameter entering the combination.
    window : bool
        Premultiply the density by the mesh window ``W_A`` at the source nodes.
    tables : MullerTables, optional

    Returns
    -------
    dict with Cartesian ``"R"`` and ``"K"`` of shape ``(N, 3)``.
    """
    if tables is None:
        tables = MullerTables(mesh, materials, params)
    elif tables.mesh is not mesh or tables.materials != materials:
        raise OperatorStateError("Müller tables were built for a different mesh or material pair")
    a = np.asarray(a, dtype=complex)
    if window:
        a = a * mesh.window[:, None]
    RD, KD = tables.delta(alpha_kind, mesh.to_frame(a), a)
    return {"R": mesh.from_frame(RD), "K": mesh.from_frame(KD)}
