"""Incident fields and their surface traces.

Type I excitations (plane wave, electric dipole, complex-source beam) live
in one medium, the exterior by default.  The Type II excitation is a bound
mode launched along an incident SIW toward the structure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import Material
from .modes import ModeSolution, mode_fields
from .windowing import SIWDescriptor, WindowParams, incident_extent


class ExcitationConfigurationError(ValueError):
    """Raised for inconsistent excitation parameters."""


class IncidenceWarning(UserWarning):
    """Issued when a Type I wavevector does not point along every SIW axis."""


@dataclass
class SurfaceDensity:
    """Tangential densities ``(m, j)`` sampled at the nodes of a mesh.

    Attributes
    ----------
    m, j : ndarray, shape (N, 3), complex
        Cartesian components.
    """

    m: np.ndarray
    j: np.ndarray

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=complex)
        self.j = np.asarray(self.j, dtype=complex)
        if self.m.shape != self.j.shape or self.m.ndim != 2 or self.m.shape[1] != 3:
            raise ValueError("m and j must both have shape (N, 3)")

    @classmethod
    def zeros(cls, n: int) -> "SurfaceDensity":
        return cls(np.zeros((n, 3), dtype=complex), np.zeros((n, 3), dtype=complex))

    @property
    def size(self) -> int:
        return self.m.shape[0]

    def normal_parts(self, mesh):
        """Largest ``|n . m|`` and ``|n . j|`` over the nodes."""
        n = mesh.normals
        return float(np.max(np.abs(np.sum(n * self.m, 1)), initial=0.0)), float(
            np.max(np.abs(np.sum(n * self.j, 1)), initial=0.0))

    def to_vector(self, mesh) -> np.ndarray:
        """Stack frame components as ``[m1, m2, j1, j2]`` (length ``4N``)."""
        mf, jf = mesh.to_frame(self.m), mesh.to_frame(self.j)
        return np.concatenate([mf[:, 0], mf[:, 1], jf[:, 0], jf[:, 1]])

    @classmethod
    def from_vector(cls, mesh, x) -> "SurfaceDensity":
        N = mesh.size
        x = np.asarray(x)
        mf = np.stack([x[:N], x[N:2 * N]], axis=1)
        jf = np.stack([x[2 * N:3 * N], x[3 * N:]], axis=1)
        return cls(mesh.from_frame(mf), mesh.from_frame(jf))

    def __add__(self, other):
        return SurfaceDensity(self.m + other.m, self.j + other.j)

    def __sub__(self, other):
        return SurfaceDensity(self.m - other.m, self.j - other.j)

    def scaled(self, w) -> "SurfaceDensity":
        """Multiply both densities by nodal weights ``w``."""
        w = np.asarray(w)[:, None]
        return SurfaceDensity(self.m * w, self.j * w)


class Excitation:
    """Base class; subclasses implement :meth:`fields`."""

    kind = "type1"
    side = "e"

    def fields(self, r, material: Material):
        raise NotImplementedError


def _unit(v, name):
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if not nv > 0:
        raise ExcitationConfigurationError(f"{name} must be non-zero")
    return v / nv


@dataclass
class PlaneWave(Excitation):
    """``E = amplitude * polarization * exp(i k d . r)`` in its medium.

    Parameters
    ----------
    direction : 3-vector
        Propagation direction (normalized internally).
    polarization : 3-vector
        Electric-field direction, orthogonal to ``direction``; complex
        vectors give elliptical polarization.
    side : {"e", "i"}
        Medium carrying the wave.
    """

    direction: tuple = (0.0, 0.0, 1.0)
    polarization: tuple = (1.0, 0.0, 0.0)
    amplitude: complex = 1.0
    side: str = "e"

    def __post_init__(self):
        self.d = _unit(self.direction, "direction")
        p = np.asarray(self.polarization, dtype=complex)
        if not np.linalg.norm(p) > 0:
            raise ExcitationConfigurationError("polarization must be non-zero")
        p = p / np.linalg.norm(p)
        if abs(np.dot(p, self.d)) > 1e-12:
            raise ExcitationConfigurationError("polarization must be orthogonal to the direction")
        self.p = p

    def fields(self, r, material: Material):
        r = np.atleast_2d(np.asarray(r, dtype=float))
        k = material.k
        phase = self.amplitude * np.exp(1j * k * (r @ self.d))
        E = phase[:, None] * self.p[None, :]
        H = (k / (material.omega * material.mu)) * np.cross(self.d, E)
        return E, H


def _dipole_fields(r, r0, p, material: Material):
    """Electric dipole of moment ``p`` at ``r0`` (possibly complex) in ``material``."""
    k = material.k
    d = np.atleast_2d(r).astype(complex) - np.asarray(r0, dtype=complex)[None, :]
    R = np.sqrt(np.sum(d * d, axis=1))
    if np.any(np.abs(R) == 0):
        raise ExcitationConfigurationError("dipole field evaluated at the source")
    Rh = d / R[:, None]
    G = np.exp(1j * k * R) / (4 * np.pi * R)
    rp = Rh @ p
    a = k * k + 1j * k / R - 1.0 / R**2
    b = -k * k - 3j * k / R + 3.0 / R**2
    E = (G / material.epsilon)[:, None] * (a[:, None] * p[None, :] + (b * rp)[:, None] * Rh)
    gradG = ((1j * k - 1.0 / R) * G)[:, None] * Rh
    H = -1j * material.omega * np.cross(gradG, p[None, :])
    return E, H


@dataclass
class Dipole(Excitation):
    """Time-harmonic electric dipole of moment ``moment`` at ``location``."""

    location: tuple = (0.0, 0.0, 0.0)
    moment: tuple = (1.0, 0.0, 0.0)
    side: str = "e"

    def __post_init__(self):
        self.r0 = np.asarray(self.location, dtype=float)
        self.p = np.asarray(self.moment, dtype=complex)

    def fields(self, r, material: Material):
        return _dipole_fields(r, self.r0, self.p, material)


@dataclass
class Beam(Excitation):
    """Complex-source-point dipole: an exact Maxwell field close to a Gaussian beam.

    The source sits at ``focus + i b d`` with Rayleigh range
    ``b = k waist^2 / 2``; the field is scaled to be of unit size near the
    focus. It is singular on the disc of radius ``b`` about the focus
    orthogonal to ``d``, so meshes must avoid that disc.

    Parameters
    ----------
    focus : 3-vector
    direction : 3-vector
    polarization : 3-vector
        Dipole moment direction, orthogonal to ``direction``.
    waist : float
        Beam waist radius.
    """

    focus: tuple = (0.0, 0.0, 0.0)
    direction: tuple = (0.0, 0.0, 1.0)
    polarization: tuple = (1.0, 0.0, 0.0)
    waist: float = 1.0
    side: str = "e"

    def __post_init__(self):
        self.d = _unit(self.direction, "direction")
        self.p = _unit(self.polarization, "polarization").astype(complex)
        if abs(np.dot(self.p.real, self.d)) > 1e-12:
            raise ExcitationConfigurationError("polarization must be orthogonal to the direction")
        if not self.waist > 0:
            raise ExcitationConfigurationError("waist must be positive")

    def rayleigh(self, material: Material) -> float:
        return float(np.real(material.k)) * self.waist**2 / 2

    def fields(self, r, material: Material):
        b = self.rayleigh(material)
        src = np.asarray(self.focus, dtype=complex) + 1j * b * self.d
        k = material.k
        scale = material.epsilon * 4 * np.pi * b * np.exp(-1j * k * 1j * b) / (k * k)
        E, H = _dipole_fields(r, src, self.p, material)
        return E * scale, H * scale


@dataclass
class BoundMode(Excitation):
    """Bound mode launched from an incident SIW toward the structure.

    The mode propagates along ``-c`` of the SIW (away from its infinite
    end). Its local frame is the SIW frame ``(e1, e2, -c)`` with phase
    reference at the SIW origin.
    """

    mode: ModeSolution = None
    siw: SIWDescriptor = None
    polarization: str = "even"
    amplitude: complex = 1.0
    kind: str = field(default="type2", init=False)
    side: str = field(default="both", init=False)

    def __post_init__(self):
        if self.mode is None or self.siw is None:
            raise ExcitationConfigurationError("BoundMode needs a mode and an incident SIW")

    @property
    def frame(self):
        e1, e2 = self.siw.frame()
        return self.siw.o, e1, e2, -self.siw.c

    def fields(self, r, material: Material | None = None):
        """Mode fields at ``r`` (material argument ignored: the mode fixes both media)."""
        E, H = mode_fields(self.mode, np.atleast_2d(r), self.frame, self.polarization)
        return self.amplitude * E, self.amplitude * H


def check_incidence(exc: Excitation, siws, strict: bool = True) -> None:
    """Require positive projection of a Type I propagation direction on every SIW axis.

    Raises
    ------
    ExcitationConfigurationError
        When ``strict`` and a projection is not positive; otherwise an
        :class:`IncidenceWarning` is issued.
    """
    d = getattr(exc, "d", None)
    if d is None or exc.kind != "type1":
        return
    bad = [s.label for s in siws if float(np.dot(d, s.c)) <= 0]
    if bad:
        msg = f"propagation direction has non-positive projection on SIW axes {bad}"
        if strict:
            raise ExcitationConfigurationError(msg)
        warnings.warn(msg, IncidenceWarning, stacklevel=2)


def incident_traces(exc: Excitation, mesh, side: str, materials=None, window: WindowParams | None = None,
                    strict: bool = True) -> SurfaceDensity:
    """Tangential traces of the incident field on ``mesh``.

    Parameters
    ----------
    exc : Excitation
    mesh : SurfaceMesh
    side : {"interior", "exterior"}
    materials : MaterialPair
        Required for Type I excitations.
    window : WindowParams, optional
        Window of the incident SIW, defaults to ``mesh.window_params``
        (Type II only).

    Returns
    -------
    SurfaceDensity
        Type I: ``(-n x E_i, -n x H_i)`` on the interior side and
        ``(n x E_e, n x H_e)`` on the exterior side, zero when the
        excitation lives in the other medium. Type II: the mode traces with
        the same sign conventions, multiplied by the incident extent of the
        SIW (one on the SIW beyond its origin, tapered by the window beyond
        it, zero off the SIW).
    """
    if side not in ("interior", "exterior"):
        raise ValueError("side must be 'interior' or 'exterior'")
    n = mesh.normals
    sgn = -1.0 if side == "interior" else 1.0
    if exc.kind == "type1":
        if materials is None:
            raise ExcitationConfigurationError("Type I traces need the material pair")
        check_incidence(exc, mesh.siws, strict)
        if (exc.side == "i") != (side == "interior"):
            return SurfaceDensity.zeros(mesh.size)
        mat = materials.interior if exc.side == "i" else materials.exterior
        E, H = exc.fields(mesh.points, mat)
        return SurfaceDensity(sgn * np.cross(n, E), sgn * np.cross(n, H))
    wp = window or mesh.window_params
    if wp is None:
        raise ExcitationConfigurationError("Type II traces need the window of the incident SIW")
    chi = incident_extent(mesh.points, exc.siw, wp)
    E, H = exc.fields(mesh.points)
    return SurfaceDensity(sgn * np.cross(n, E), sgn * np.cross(n, H)).scaled(chi)
