"""Series solution for a dielectric sphere under plane-wave incidence.

The incident wave is ``E = x exp(i k z)`` in the exterior medium.  Fields are
expanded in vector spherical harmonics ``M_{e/o,1n}``, ``N_{e/o,1n}`` with
the usual Lorenz-Mie coefficients ``a_n, b_n`` (scattered) and ``c_n, d_n``
(internal), time dependence ``exp(-i omega t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from .kernels import Material


def _z(kind, n, x):
    j = spherical_jn(n, x)
    if kind == 1:
        return j, spherical_jn(n, x, derivative=True)
    y = spherical_yn(n, x)
    return j + 1j * y, spherical_jn(n, x, derivative=True) + 1j * spherical_yn(n, x, derivative=True)


def _angular(nmax, mu):
    """``pi_n`` and ``tau_n`` for ``n = 1..nmax`` at ``mu = cos(theta)``."""
    pi = np.zeros((nmax + 1,) + mu.shape)
    tau = np.zeros_like(pi)
    pi[1] = 1.0
    for n in range(2, nmax + 1):
        pi[n] = ((2 * n - 1) * mu * pi[n - 1] - n * pi[n - 2]) / (n - 1)
    for n in range(1, nmax + 1):
        tau[n] = n * mu * pi[n] - (n + 1) * pi[n - 1]
    return pi[1:], tau[1:]


def vsh(kind, nmax, k, r_sph):
    """Vector spherical harmonics ``M_o1n, M_e1n, N_o1n, N_e1n`` in spherical components.

    Parameters
    ----------
    kind : {1, 3}
        Radial function ``j_n`` (regular) or ``h_n^(1)`` (outgoing).
    nmax : int
    k : complex
        Wavenumber of the medium.
    r_sph : tuple of arrays ``(r, theta, phi)``

    Returns
    -------
    dict of arrays with shape ``(nmax, P, 3)`` holding ``(r, theta, phi)``
    components.
    """
    r, th, ph = r_sph
    rho = k * r
    n = np.arange(1, nmax + 1)[:, None]
    z, dz = _z(kind, n, rho[None, :])
    dz_rho = (z + rho[None, :] * dz) / rho[None, :]  # [rho z_n]' / rho
    zr = z / rho[None, :]
    pi, tau = _angular(nmax, np.cos(th))
    s, c = np.sin(ph)[None, :], np.cos(ph)[None, :]
    sth = np.sin(th)[None, :]
    nn1 = n * (n + 1)
    zero = np.zeros(pi.shape, dtype=complex)
    Mo = np.stack([zero, c * pi * z, -s * tau * z], axis=-1)
    Me = np.stack([zero, -s * pi * z, -c * tau * z], axis=-1)
    No = np.stack([s * nn1 * sth * pi * zr, s * tau * dz_rho, c * pi * dz_rho], axis=-1)
    Ne = np.stack([c * nn1 * sth * pi * zr, c * tau * dz_rho, -s * pi * dz_rho], axis=-1)
    return {"Mo": Mo, "Me": Me, "No": No, "Ne": Ne}


def _spherical(x):
    r = np.linalg.norm(x, axis=1)
    th = np.arccos(np.clip(x[:, 2] / np.where(r > 0, r, 1), -1, 1))
    ph = np.arctan2(x[:, 1], x[:, 0])
    return r, th, ph


def _sph_to_cart(v, th, ph):
    st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
    er = np.stack([st * cp, st * sp, ct], axis=1)
    et = np.stack([ct * cp, ct * sp, -st], axis=1)
    ep = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    return v[..., 0:1] * er + v[..., 1:2] * et + v[..., 2:3] * ep


def mie_coefficients(nmax, x, m):
    """Lorenz-Mie coefficients for size parameter ``x`` and relative index ``m`` (equal permeability).

    Returns
    -------
    a, b, c, d : ndarray, shape (nmax,)
    """
    n = np.arange(1, nmax + 1)
    jx, djx = _z(1, n, x)
    jmx, djmx = _z(1, n, m * x)
    hx, dhx = _z(3, n, x)
    psi_x, dpsi_x = x * jx, jx + x * djx
    psi_mx, dpsi_mx = m * x * jmx, jmx + m * x * djmx
    xi_x, dxi_x = x * hx, hx + x * dhx
    a = (m * psi_mx * dpsi_x - psi_x * dpsi_mx) / (m * psi_mx * dxi_x - xi_x * dpsi_mx)
    b = (psi_mx * dpsi_x - m * psi_x * dpsi_mx) / (psi_mx * dxi_x - m * xi_x * dpsi_mx)
    num = jx * dxi_x - hx * dpsi_x
    c = num / (jmx * dxi_x - hx * dpsi_mx)
    d = m * num / (m * m * jmx * dxi_x - hx * dpsi_mx)
    return a, b, c, d


@dataclass
class MieSphere:
    """Dielectric sphere centred at the origin.

    Parameters
    ----------
    radius : float
    exterior, interior : Material
        Media outside and inside; permeabilities must agree.
    nmax : int, optional
        Series truncation; defaults to ``x + 4 x^(1/3) + 16`` with ``x`` the
        larger of the two size parameters.
    """

    radius: float
    exterior: Material
    interior: Material
    nmax: int | None = None

    def __post_init__(self):
        if not np.isclose(self.exterior.mu, self.interior.mu):
            raise ValueError("the series here assumes equal permeabilities")
        k = self.exterior.k
        self.m = self.interior.k / k
        x = float(np.real(k)) * self.radius
        if self.nmax is None:
            xs = max(x, abs(self.m) * x)
            self.nmax = int(np.ceil(xs + 4 * xs ** (1 / 3) + 16))
        self.x = x
        self.a, self.b, self.c, self.d = mie_coefficients(self.nmax, x, self.m)
        n = np.arange(1, self.nmax + 1)
        self.En = (1j**n) * (2 * n + 1) / (n * (n + 1))

    def _sum(self, kind, k, x, cM, cN, eo_E, eo_H, cH, hM, hN):
        r, th, ph = _spherical(x)
        V = vsh(kind, self.nmax, k, (r, th, ph))
        En = self.En[:, None, None]
        E = np.sum(En * (cM[:, None, None] * V["M" + eo_E[0]] + cN[:, None, None] * V["N" + eo_E[1]]), axis=0)
        H = cH * np.sum(En * (hM[:, None, None] * V["M" + eo_H[0]] + hN[:, None, None] * V["N" + eo_H[1]]), axis=0)
        return _sph_to_cart(E, th, ph), _sph_to_cart(H, th, ph)

    def incident(self, x):
        """Series form of the incident wave ``x exp(i k z)`` (for self-checks)."""
        x = np.atleast_2d(x)
        k = self.exterior.k
        one = np.ones(self.nmax)
        return self._sum(1, k, x, one, -1j * one, "oe", "eo", -k / (self.exterior.omega * self.exterior.mu),
                         one, 1j * one)

    def scattered(self, x):
        """Scattered field outside the sphere."""
        x = np.atleast_2d(x)
        k = self.exterior.k
        return self._sum(3, k, x, -self.b, 1j * self.a, "oe", "eo", k / (self.exterior.omega * self.exterior.mu),
                         self.a, 1j * self.b)

    def internal(self, x):
        """Total field inside the sphere."""
        x = np.atleast_2d(x)
        k1 = self.interior.k
        return self._sum(1, k1, x, self.c, -1j * self.d, "oe", "eo",
                         -k1 / (self.interior.omega * self.interior.mu), self.d, 1j * self.c)

    def total(self, x):
        """Total field: internal inside, incident plus scattered outside."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        inside = r < self.radius
        E = np.zeros((len(x), 3), dtype=complex)
        H = np.zeros_like(E)
        if inside.any():
            E[inside], H[inside] = self.internal(x[inside])
        out = ~inside
        if out.any():
            k = self.exterior.k
            Es, Hs = self.scattered(x[out])
            zz = np.exp(1j * k * x[out, 2])
            E[out] = Es
            E[out, 0] += zz
            H[out] = Hs
            H[out, 1] += zz * k / (self.exterior.omega * self.exterior.mu)
        return E, H
