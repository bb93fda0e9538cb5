"""Bound hybrid modes of a circular step-index waveguide.

Fields carry the factor ``exp(i (kz z - omega t))``.  Inside the core
(``rho < a``) the axial components are ``Ez = A J_m(h rho) cos(m phi)`` and
``Hz = B J_m(h rho) sin(m phi)`` with ``h = u / a``; outside they are
``C K_m(g rho) cos(m phi)`` and ``D K_m(g rho) sin(m phi)`` with
``g = w / a`` (for ``m = 0`` the factor of ``Hz`` is 1, giving TE modes).  Transverse components follow from Maxwell's equations,

    E_t = (i / q^2) (kz grad_t Ez - omega mu z x grad_t Hz),
    H_t = (i / q^2) (kz grad_t Hz + omega eps z x grad_t Ez),

with ``q^2 = k^2 - kz^2``.  The propagation constant solves the pole-free
form of the standard eigenvalue equation

    (J' w K + K' u J)(n1^2 J' w K + n2^2 K' u J)
        = m^2 (kz / k0)^2 (1/u^2 + 1/w^2)^2 (u w J K)^2,

where ``J = J_m(u)``, ``K = K_m(w)`` and primes are derivatives.  The
amplitudes are the null vector of the four interface-continuity conditions,
scaled to unit axial power.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .kernels import Material


class ModeDomainError(ValueError):
    """Raised for invalid Bessel arguments or non-guiding material pairs."""


def bessel(kind: str, order: int, x):
    """Bessel function ``J_m`` or modified Bessel ``K_m`` and its derivative.

    Parameters
    ----------
    kind : {"J", "K"}
    order : int
        Non-negative integer order.
    x : float or ndarray
        Positive real argument.

    Returns
    -------
    (value, derivative)
    """
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ModeDomainError("Bessel argument must be positive and finite")
    if int(order) != order or order < 0:
        raise ModeDomainError("Bessel order must be a non-negative integer")
    if kind == "J":
        return special.jv(order, x), special.jvp(order, x)
    if kind == "K":
        return special.kv(order, x), special.kvp(order, x)
    raise ModeDomainError(f"unknown Bessel kind {kind!r}")


@dataclass
class ModeSolution:
    """One bound mode of a circular step-index guide in its local frame.

    Attributes
    ----------
    m_az : int
        Azimuthal order.
    kz : float
        Propagation constant.
    u, w : float
        Core and cladding transverse parameters ``a sqrt(k_i^2 - kz^2)`` and
        ``a sqrt(kz^2 - k_e^2)``.
    coeffs : ndarray, shape (4,)
        Amplitudes ``(A, B, C, D)`` of the axial-field ansatz.
    radius : float
        Core radius ``a``.
    core, clad : Material
    residual : float
        Relative residual of the eigenvalue equation at ``kz``.
    family : str
        Label such as ``"HE11"``, ``"TE01"``.
    """

    m_az: int
    kz: float
    u: float
    w: float
    coeffs: np.ndarray
    radius: float
    core: Material
    clad: Material
    residual: float
    family: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def omega(self) -> float:
        return self.core.omega

    @property
    def k0(self) -> float:
        return self.core.omega

    @property
    def decay_rate(self) -> float:
        """Transverse decay constant ``w / a`` of the cladding field."""
        return self.w / self.radius

    @property
    def wavelength(self) -> float:
        """Modal wavelength ``2 pi / kz``."""
        return 2 * np.pi / self.kz

    def fields(self, x, y, z=0.0, polarization: str = "even"):
        """Local-frame fields at ``(x, y, z)``; see :func:`mode_fields_local`."""
        return mode_fields_local(self, x, y, z, polarization)


def dispersion_product(m, u, w, n1, n2, kz_over_k0):
    """Pole-free product form of the eigenvalue equation: ``(value, size of the two sides)``."""
    J, Jp = special.jv(m, u), special.jvp(m, u)
    K, Kp = special.kv(m, w), special.kvp(m, w)
    t1 = Jp * w * K + Kp * u * J
    t2 = n1**2 * Jp * w * K + n2**2 * Kp * u * J
    rhs = m * m * kz_over_k0**2 * (1 / u**2 + 1 / w**2) ** 2 * (u * w * J * K) ** 2
    return t1 * t2 - rhs, abs(t1 * t2) + abs(rhs)


def _amplitude_matrix(m, kz, u, w, a, core: Material, clad: Material):
    """Continuity of ``Ez, Hz, E_phi, H_phi`` at ``rho = a`` for unit angular factors."""
    om = core.omega
    h = u / a
    g = w / a
    q1, q2 = h * h, -g * g
    J, Jp = special.jv(m, h * a), special.jvp(m, h * a)
    K, Kp = special.kv(m, g * a), special.kvp(m, g * a)
    e1, mu1 = core.epsilon, core.mu
    e2, mu2 = clad.epsilon, clad.mu
    # E_phi coefficient of sin(m phi): (i/q^2) [kz (-m/a) Ez_rad - om mu dHz_rad]
    # H_phi coefficient of cos(m phi): (i/q^2) [kz (m/a) Hz_rad + om eps dEz_rad]
    M = np.zeros((4, 4), dtype=complex)
    M[0] = [J, 0, -K, 0]
    M[1] = [0, J, 0, -K]
    M[2] = [
        1j / q1 * kz * (-m / a) * J,
        1j / q1 * (-om * mu1) * h * Jp,
        -1j / q2 * kz * (-m / a) * K,
        -1j / q2 * (-om * mu2) * g * Kp,
    ]
    M[3] = [
        1j / q1 * om * e1 * h * Jp,
        1j / q1 * kz * (m / a) * J,
        -1j / q2 * om * e2 * g * Kp,
        -1j / q2 * kz * (m / a) * K,
    ]
    return M


def _branches(m, u, w, n1, n2, V):
    """Stable factorization of the eigenvalue equation for ``m >= 1``.

    Read as a quadratic in ``eta1 = J'/(u J)``, the equation has the two
    solutions ``eta1 = a -+ sqrt(b)`` with ``eta2 = K'/(w K)``,
    ``a = -(n1^2 + n2^2) eta2 / (2 n1^2)`` and
    ``b = ((n1^2 - n2^2) eta2 / (2 n1^2))^2 + m^2 (kz / (n1 k0))^2 (1/u^2 + 1/w^2)^2``.
    The minus branch (HE modes) is formed as ``(a^2 - b) / (a + sqrt(b))``
    with the leading ``w**-4`` terms of ``a^2 - b`` cancelled analytically,
    which keeps it accurate as ``w -> 0``.  Returns ``(H_minus, H_plus,
    scale_minus, scale_plus)`` where ``H = J'(u) - u J(u) (branch)`` is free
    of poles.
    """
    J, Jp = special.jv(m, u), special.jvp(m, u)
    Km, Km1 = special.kv(m, w), special.kv(m - 1, w)
    kap = Km1 / (w * Km)
    eta2 = -kap - m / w**2
    NA2 = n1**2 - n2**2
    a_ = -(n1**2 + n2**2) / (2 * n1**2) * eta2
    c = NA2 / (2 * n1**2)
    bz2 = n2**2 + w**2 * NA2 / V**2
    d2 = m * m * bz2 / n1**2 * (1 / u**2 + 1 / w**2) ** 2
    sb = np.sqrt(c * c * eta2 * eta2 + d2)
    num = (
        n2**2 * (2 * m * kap / w**2 + kap * kap)
        - 2 * m * m * n2**2 / (u**2 * w**2)
        - m * m * NA2 / (V**2 * w**2)
        - m * m * n2**2 / u**4
        - 2 * m * m * NA2 / (V**2 * u**2)
        - m * m * NA2 * w**2 / (V**2 * u**4)
    ) / n1**2
    minus = num / (a_ + sb)
    plus = a_ + sb
    uJ = u * J
    return Jp - uJ * minus, Jp - uJ * plus, abs(Jp) + abs(uJ * minus), abs(Jp) + abs(uJ * plus)


def _branch_functions(m, V, n1, n2, k0, a):
    """Scalar functions of ``w`` whose roots are the modes of order ``m``.

    Returns a list of ``(label, f, rel)`` with ``rel(w)`` the relative residual.
    """

    def kz_of(w):
        return np.sqrt((n2 * k0) ** 2 + (w / a) ** 2)

    if m == 0:
        def te(w):
            u = np.sqrt(V * V - w * w)
            return special.jvp(0, u) * w * special.kv(0, w) + special.kvp(0, w) * u * special.jv(0, u)

        def tm(w):
            u = np.sqrt(V * V - w * w)
            return (n1**2 * special.jvp(0, u) * w * special.kv(0, w)
                    + n2**2 * special.kvp(0, w) * u * special.jv(0, u))

        def rel_te(w):
            u = np.sqrt(V * V - w * w)
            s = abs(special.jvp(0, u) * w * special.kv(0, w)) + abs(special.kvp(0, w) * u * special.jv(0, u))
            return abs(te(w)) / s

        def rel_tm(w):
            u = np.sqrt(V * V - w * w)
            s = (abs(n1**2 * special.jvp(0, u) * w * special.kv(0, w))
                 + abs(n2**2 * special.kvp(0, w) * u * special.jv(0, u)))
            return abs(tm(w)) / s

        return [("TE", te, rel_te), ("TM", tm, rel_tm)]

    def he(w):
        return _branches(m, np.sqrt(V * V - w * w), w, n1, n2, V)[0]

    def eh(w):
        return _branches(m, np.sqrt(V * V - w * w), w, n1, n2, V)[1]

    def rel_he(w):
        r = _branches(m, np.sqrt(V * V - w * w), w, n1, n2, V)
        return abs(r[0]) / r[2]

    def rel_eh(w):
        r = _branches(m, np.sqrt(V * V - w * w), w, n1, n2, V)
        return abs(r[1]) / r[3]

    return [("HE", he, rel_he), ("EH", eh, rel_eh)]


def _scan_roots(fun, V, n_lin=4000, n_log=400):
    """Sign changes of ``fun`` on a grid in ``w`` over ``(0, V)``, polished by Brent's method."""
    grid = np.unique(np.concatenate([
        np.geomspace(V * 1e-14, 0.01 * V, n_log),
        np.linspace(0.01 * V, V * (1 - 1e-12), n_lin),
    ]))
    with np.errstate(all="ignore"):
        vals = fun(grid)
    roots = []
    for i in range(grid.size - 1):
        f0, f1 = vals[i], vals[i + 1]
        if not (np.isfinite(f0) and np.isfinite(f1)) or f0 * f1 > 0:
            continue
        if f0 == 0:
            roots.append(grid[i])
            continue
        if f1 == 0:
            continue
        roots.append(optimize.brentq(fun, grid[i], grid[i + 1], xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                     maxiter=500))
    return roots


def solve_modes(core: Material, clad: Material, radius: float, omega: float | None = None,
                m_az_max: int = 3) -> list:
    """All bound modes with ``0 <= m_az <= m_az_max``, sorted by ``kz`` descending.

    Parameters
    ----------
    core, clad : Material
        Core (interior) and cladding (exterior) media; only real indices are
        supported.
    radius : float
        Core radius ``a``.
    omega : float, optional
        Angular frequency; defaults to the materials' value.
    m_az_max : int
        Largest azimuthal order searched.

    Returns
    -------
    list of ModeSolution
        Empty when no mode is guided (equal indices).
    """
    if omega is not None and not np.isclose(omega, core.omega):
        core = Material(core.epsilon, core.mu, omega)
        clad = Material(clad.epsilon, clad.mu, omega)
    n1 = float(np.real(core.index))
    n2 = float(np.real(clad.index))
    if abs(np.imag(core.index)) > 0 or abs(np.imag(clad.index)) > 0:
        raise ModeDomainError("lossy materials are not supported by the mode solver")
    if not radius > 0:
        raise ModeDomainError("core radius must be positive")
    if n1 < n2:
        raise ModeDomainError("core index must exceed the cladding index")
    if n1 == n2:
        return []
    k0 = core.omega
    V = k0 * radius * np.sqrt(n1**2 - n2**2)
    modes = []
    for m in range(m_az_max + 1):
        for label, fun, rel in _branch_functions(m, V, n1, n2, k0, radius):
            roots = sorted(_scan_roots(fun, V), reverse=True)
            for idx, w in enumerate(roots, start=1):
                u = np.sqrt(V * V - w * w)
                kz = np.sqrt((n2 * k0) ** 2 + (w / radius) ** 2)
                M = _amplitude_matrix(m, kz, u, w, radius, core, clad)
                if m == 0:
                    # TE and TM decouple: Ez = 0 (rows Hz, E_phi) or Hz = 0 (rows Ez, H_phi)
                    rows, cols = ([1, 2], [1, 3]) if label == "TE" else ([0, 3], [0, 2])
                    sub = np.linalg.svd(M[np.ix_(rows, cols)])[2][-1].conj()
                    coeffs = np.zeros(4, dtype=complex)
                    coeffs[cols] = sub
                    s_vals = np.linalg.svd(M[np.ix_(rows, cols)], compute_uv=False)
                else:
                    _, s_vals, vh = np.linalg.svd(M)
                    coeffs = vh[-1].conj()
                mode = ModeSolution(m, float(kz), float(u), float(w), coeffs, float(radius), core, clad,
                                    float(rel(w)), family=f"{label}{m}{idx}",
                                    extra={"singular_values": s_vals})
                _normalize(mode)
                modes.append(mode)
    modes.sort(key=lambda md: -md.kz)
    return modes


# ----------------------------------------------------------------------------
# field evaluation
# ----------------------------------------------------------------------------


def _axial_parts(mode: ModeSolution, rho):
    """Radial profiles of Ez, Hz and their rho-derivatives, split by region."""
    a = mode.radius
    m = mode.m_az
    A, B, C, D = mode.coeffs
    h = mode.u / a
    g = mode.w / a
    inside = rho < a
    ez = np.empty(rho.shape, dtype=complex)
    dez = np.empty_like(ez)
    hz = np.empty_like(ez)
    dhz = np.empty_like(ez)
    ri = rho[inside]
    J, Jp = special.jv(m, h * ri), special.jvp(m, h * ri)
    ez[inside], dez[inside] = A * J, A * h * Jp
    hz[inside], dhz[inside] = B * J, B * h * Jp
    ro = rho[~inside]
    K, Kp = special.kv(m, g * ro), special.kvp(m, g * ro)
    ez[~inside], dez[~inside] = C * K, C * g * Kp
    hz[~inside], dhz[~inside] = D * K, D * g * Kp
    return inside, ez, dez, hz, dhz


def mode_fields_local(mode: ModeSolution, x, y, z=0.0, polarization: str = "even"):
    """Mode fields in the guide frame (axis ``z``).

    Parameters
    ----------
    x, y, z : array_like
        Local coordinates (broadcast together).
    polarization : {"even", "odd"}
        ``"odd"`` is the even mode rotated by ``pi / (2 m)`` (``m >= 1``).

    Returns
    -------
    E, H : ndarray, shape (..., 3)
    """
    x, y, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))
    shape = x.shape
    x, y, z = x.ravel(), y.ravel(), z.ravel()
    a = mode.radius
    m = mode.m_az
    rho = np.hypot(x, y)
    phi = np.arctan2(y, x)
    if polarization == "odd":
        if m == 0:
            raise ModeDomainError("m = 0 modes have a single polarization")
        phi = phi - 0.5 * np.pi / m
    elif polarization != "even":
        raise ModeDomainError(f"unknown polarization {polarization!r}")
    rho_s = np.maximum(rho, 1e-14 * a)
    inside, ez, dez, hz, dhz = _axial_parts(mode, rho_s)
    kz = mode.kz
    om = mode.omega
    eps = np.where(inside, mode.core.epsilon, mode.clad.epsilon)
    mu = np.where(inside, mode.core.mu, mode.clad.mu)
    q2 = np.where(inside, (mode.u / a) ** 2, -((mode.w / a) ** 2))
    # angular factors: Ez ~ cos(m phi), Hz ~ sin(m phi); for m = 0 the
    # circularly symmetric TE branch needs Hz ~ 1 instead
    c = np.cos(m * phi)
    s = np.sin(m * phi) if m > 0 else np.ones_like(phi)
    Ez = ez * c
    Hz = hz * s
    dEz_r, dEz_p = dez * c, -m * ez * s / rho_s
    dHz_r, dHz_p = dhz * s, m * hz * c / rho_s
    f = 1j / q2
    Er = f * (kz * dEz_r + om * mu * dHz_p)
    Ep = f * (kz * dEz_p - om * mu * dHz_r)
    Hr = f * (kz * dHz_r - om * eps * dEz_p)
    Hp = f * (kz * dHz_p + om * eps * dEz_r)
    phase = np.exp(1j * kz * z)
    phi0 = np.arctan2(y, x)
    cp, sp = np.cos(phi0), np.sin(phi0)
    E = np.stack([Er * cp - Ep * sp, Er * sp + Ep * cp, Ez], axis=-1) * phase[:, None]
    H = np.stack([Hr * cp - Hp * sp, Hr * sp + Hp * cp, Hz], axis=-1) * phase[:, None]
    return E.reshape(shape + (3,)), H.reshape(shape + (3,))


def axial_power(mode: ModeSolution, n_r: int = 96, n_phi: int | None = None) -> float:
    """``int (1/2) Re(E x H*) . z dA`` over the cross-section by tensor quadrature."""
    a = mode.radius
    g = mode.w / a
    n_phi = n_phi or 8 * (mode.m_az + 2)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    xg, wg = np.polynomial.legendre.leggauss(n_r)
    total = 0.0
    tail = a + 60.0 / g
    for lo, hi in ((0.0, a), (a, 2 * a), (2 * a, min(tail, 6 * a)), (min(tail, 6 * a), tail)):
        if hi <= lo:
            continue
        r = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
        wr = 0.5 * (hi - lo) * wg
        R, P = np.meshgrid(r, phi, indexing="ij")
        E, H = mode_fields_local(mode, R * np.cos(P), R * np.sin(P))
        Sz = 0.5 * np.real(E[..., 0] * np.conj(H[..., 1]) - E[..., 1] * np.conj(H[..., 0]))
        total += float(np.sum(Sz * (wr * r)[:, None]) * 2 * np.pi / n_phi)
    return total


def _normalize(mode: ModeSolution) -> None:
    P = axial_power(mode)
    if P <= 0:
        raise ModeDomainError("mode carries non-positive axial power")
    mode.coeffs = mode.coeffs / np.sqrt(P)
    # fix the global phase: the dominant transverse E component at (a/2, 0) is real positive
    E, _ = mode_fields_local(mode, 0.5 * mode.radius, 0.0)
    k = int(np.argmax(np.abs(E[:2]))) if np.max(np.abs(E[:2])) > 0 else 2
    ph = E[k] / abs(E[k])
    mode.coeffs = mode.coeffs / ph


def mode_fields(mode: ModeSolution, r, frame=None, polarization: str = "even"):
    """Mode fields at global points ``r``.

    Parameters
    ----------
    mode : ModeSolution
    r : ndarray, shape (..., 3)
    frame : tuple (origin, e1, e2, t), optional
        Local guide frame: ``t`` is the propagation direction and
        ``e1 x e2 = t``. Defaults to the global axes.
    polarization : {"even", "odd"}

    Returns
    -------
    E, H : ndarray, shape (..., 3)
    """
    r = np.asarray(r, dtype=float)
    if frame is None:
        E, H = mode_fields_local(mode, r[..., 0], r[..., 1], r[..., 2], polarization)
        return E, H
    o, e1, e2, t = (np.asarray(v, dtype=float) for v in frame)
    d = r - o
    El, Hl = mode_fields_local(mode, d @ e1, d @ e2, d @ t, polarization)
    basis = np.stack([e1, e2, t])
    return El @ basis, Hl @ basis


__all__ = [
    "ModeDomainError",
    "ModeSolution",
    "axial_power",
    "bessel",
    "dispersion_product",
    "mode_fields",
    "mode_fields_local",
    "solve_modes",
]
