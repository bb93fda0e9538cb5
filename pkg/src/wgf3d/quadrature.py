"""Chebyshev/Fejér patch quadrature and polar singular rules.

Each patch carries an ``n x n`` tensor grid of open Chebyshev points in
``[-1, 1]^2``.  Smooth integrals use the first-kind Fejér rule, data is
interpolated and differentiated spectrally, and kernels with an integrable
``1/|r - r'|`` singularity are integrated with a polar rule centred at the
projection of the target onto the parameter square.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class QuadratureDomainError(ValueError):
    """Raised for interpolation targets outside the parameter square."""


@lru_cache(maxsize=None)
def cheb_nodes(n: int) -> np.ndarray:
    """Ascending first-kind Chebyshev points ``-cos((2k+1) pi / (2n))``."""
    k = np.arange(n)
    x = -np.cos((2 * k + 1) * np.pi / (2 * n))
    x.setflags(write=False)
    return x


@lru_cache(maxsize=None)
def fejer_rule(n: int):
    """First-kind Fejér rule on the open Chebyshev points.

    Parameters
    ----------
    n : int
        Number of points, ``n >= 2``.

    Returns
    -------
    x, w : ndarray
        Ascending nodes and positive weights; exact for polynomials of
        degree ``<= n - 1``.
    """
    if n < 2:
        raise ValueError("fejer_rule needs n >= 2")
    k = np.arange(n)
    theta = (2 * k + 1) * np.pi / (2 * n)
    j = np.arange(1, n // 2 + 1)
    s = np.cos(2 * np.outer(theta, j)) / (4 * j**2 - 1)
    w = (2.0 / n) * (1 - 2 * s.sum(axis=1))
    x = -np.cos(theta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _bary_weights(n: int) -> np.ndarray:
    k = np.arange(n)
    theta = (2 * k + 1) * np.pi / (2 * n)
    lam = (-1.0) ** k * np.sin(theta)
    lam.setflags(write=False)
    return lam


def interp_matrix(n: int, x) -> np.ndarray:
    """Barycentric interpolation matrix from ``cheb_nodes(n)`` to points ``x``.

    Returns an array of shape ``(len(x), n)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1 + 1e-12):
        raise QuadratureDomainError("interpolation target outside [-1, 1]")
    nodes = cheb_nodes(n)
    lam = _bary_weights(n)
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    c = lam[None, :] / diff
    L = c / c.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    if np.any(rows):
        L[rows] = exact[rows].astype(float)
    return L


@lru_cache(maxsize=None)
def diff_matrix(n: int) -> np.ndarray:
    """Spectral differentiation matrix on ``cheb_nodes(n)``."""
    x = cheb_nodes(n)
    lam = _bary_weights(n)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (lam[None, :] / lam[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    D.setflags(write=False)
    return D


def cheb_interp(values, u, v) -> np.ndarray:
    """Interpolate patch data sampled on the ``n x n`` grid.

    Parameters
    ----------
    values : ndarray, shape (n, n, ...)
        Samples indexed ``[i, j]`` with ``i`` along ``u`` and ``j`` along ``v``.
    u, v : array_like
        Targets in ``[-1, 1]``; broadcast against each other.

    Returns
    -------
    ndarray, shape (len(u), ...)
    """
    values = np.asarray(values)
    n = values.shape[0]
    u, v = np.broadcast_arrays(np.atleast_1d(u), np.atleast_1d(v))
    Lu = interp_matrix(n, u.ravel())
    Lv = interp_matrix(n, v.ravel())
    flat = values.reshape(n, n, -1)
    out = np.einsum("qi,ijk,qj->qk", Lu, flat, Lv)
    return out.reshape((u.size,) + values.shape[2:])


def surface_div(xu, xv, a) -> np.ndarray:
    """Surface divergence of a tangential field on one patch.

    Parameters
    ----------
    xu, xv : ndarray, shape (n, n, 3)
        Parametric tangent vectors at the nodes.
    a : ndarray, shape (n, n, 3) or (n, n, 3, m)
        Tangential field(s).

    Returns
    -------
    ndarray, shape (n, n) or (n, n, m)
        ``(1/J) [d_u (J a^u) + d_v (J a^v)]`` with contravariant components
        ``a^u, a^v`` from the metric.
    """
    n = xu.shape[0]
    D = diff_matrix(n)
    guu = np.einsum("ijk,ijk->ij", xu, xu)
    guv = np.einsum("ijk,ijk->ij", xu, xv)
    gvv = np.einsum("ijk,ijk->ij", xv, xv)
    det = guu * gvv - guv**2
    J = np.sqrt(det)
    squeeze = a.ndim == 3
    if squeeze:
        a = a[..., None]
    bu = np.einsum("ijk,ijkm->ijm", xu, a)
    bv = np.einsum("ijk,ijkm->ijm", xv, a)
    au = (gvv[..., None] * bu - guv[..., None] * bv) / det[..., None]
    av = (-guv[..., None] * bu + guu[..., None] * bv) / det[..., None]
    fu = J[..., None] * au
    fv = J[..., None] * av
    div = (np.einsum("ik,kjm->ijm", D, fu) + np.einsum("jk,ikm->ijm", D, fv)) / J[..., None]
    return div[..., 0] if squeeze else div


def surface_grad(xu, xv, f) -> np.ndarray:
    """Surface gradient of scalar patch data, shape ``(n, n, 3[, m])``."""
    n = xu.shape[0]
    D = diff_matrix(n)
    guu = np.einsum("ijk,ijk->ij", xu, xu)
    guv = np.einsum("ijk,ijk->ij", xu, xv)
    gvv = np.einsum("ijk,ijk->ij", xv, xv)
    det = guu * gvv - guv**2
    squeeze = f.ndim == 2
    if squeeze:
        f = f[..., None]
    fu = np.einsum("ik,kjm->ijm", D, f)
    fv = np.einsum("jk,ikm->ijm", D, f)
    cu = (gvv[..., None] * fu - guv[..., None] * fv) / det[..., None]
    cv = (-guv[..., None] * fu + guu[..., None] * fv) / det[..., None]
    g = xu[..., None] * cu[:, :, None, :] + xv[..., None] * cv[:, :, None, :]
    return g[..., 0] if squeeze else g


# ---------------------------------------------------------------------------
# polar rules
# ---------------------------------------------------------------------------

_EDGE_TOL = 1e-10


def _triangles(u0: float, v0: float):
    """Right triangles splitting the square at the feet of perpendiculars.

    Yields ``(foot, direction, h, b)``: the perpendicular foot on an edge, the
    unit edge direction away from the foot, the height ``h`` and the leg
    length ``b``.
    """
    out = []
    # edges: u = +1, u = -1, v = +1, v = -1
    for normal, along in (((1, 0), (0, 1)), ((-1, 0), (0, 1)), ((0, 1), (1, 0)), ((0, -1), (1, 0))):
        nx, ny = normal
        h = 1.0 - (nx * u0 + ny * v0)
        if h < _EDGE_TOL:
            continue
        foot = np.array([u0, v0]) + h * np.array(normal, dtype=float)
        t0 = foot[0] * along[0] + foot[1] * along[1]
        for sign in (1.0, -1.0):
            b = 1.0 - sign * t0
            if b < _EDGE_TOL:
                continue
            out.append((foot, sign * np.array(along, dtype=float), h, b))
    return out


def polar_rule(u0: float, v0: float, n_rad: int = 12, n_ang: int = 16, jac=None, delta: float = 0.0):
    """Polar quadrature on ``[-1, 1]^2`` centred at ``(u0, v0)``.

    The square is split into right triangles with apex at the centre.  Along
    each triangle's outer edge the offset from the foot of the perpendicular
    is mapped as ``t = h sinh(tau)``, which clusters rays toward short
    triangle legs.  The radial variable uses Gauss-Legendre points, either
    plainly (``delta = 0``, target on the patch) or through the graded map
    ``s = eps sinh(sigma)`` with ``eps = delta / ray length`` for targets at
    distance ``delta`` from the patch.

    Parameters
    ----------
    u0, v0 : float
        Centre in ``[-1, 1]^2``.
    n_rad, n_ang : int
        Base radial and angular orders; the angular order grows with the
        ``tau`` range and the radial order with ``log(1/eps)``.
    jac : ndarray, shape (3, 2), optional
        Parametric Jacobian at the centre, used to convert ray lengths to
        physical lengths in the graded map.
    delta : float
        Distance of the target from the surface point at the centre.

    Returns
    -------
    u, v, w : ndarray
        Parameter points and parameter-space area weights.
    """
    us, vs, ws = [], [], []
    p = np.array([u0, v0], dtype=float)
    for foot, direc, h, b in _triangles(u0, v0):
        tau_max = np.arcsinh(b / h)
        na = max(n_ang, int(np.ceil(n_ang * tau_max / 1.5)))
        xt, wt = fejer_rule(na)
        tau = 0.5 * tau_max * (xt + 1)
        wtau = 0.5 * tau_max * wt
        t = h * np.sinh(tau)
        dt = h * np.cosh(tau) * wtau
        edge = foot[None, :] + t[:, None] * direc[None, :]
        ray = edge - p[None, :]
        if delta > 0.0:
            if jac is None:
                length = np.linalg.norm(ray, axis=1)
            else:
                length = np.linalg.norm(ray @ np.asarray(jac).T, axis=1)
            eps = np.maximum(delta / length, 1e-14)
            smax = np.arcsinh(1.0 / eps)
            nr = n_rad + int(np.ceil(2.0 * smax.max()))
            xr, wr = gauss_legendre(nr)
            sig = 0.5 * smax[:, None] * (xr[None, :] + 1)
            s = eps[:, None] * np.sinh(sig)
            ds = eps[:, None] * np.cosh(sig) * 0.5 * smax[:, None] * wr[None, :]
            us.append((p[0] + s * ray[:, 0:1]).ravel())
            vs.append((p[1] + s * ray[:, 1:2]).ravel())
            ws.append((ds * s * h * dt[:, None]).ravel())
        else:
            xr, wr = gauss_legendre(n_rad)
            s = 0.5 * (xr + 1)
            ds = 0.5 * wr
            us.append((p[0] + s[None, :] * ray[:, 0:1]).ravel())
            vs.append((p[1] + s[None, :] * ray[:, 1:2]).ravel())
            ws.append((ds[None, :] * s[None, :] * h * dt[:, None]).ravel())
    u = np.clip(np.concatenate(us), -1.0, 1.0)
    v = np.clip(np.concatenate(vs), -1.0, 1.0)
    return u, v, np.concatenate(ws)


def khatri_rao(Lu, Lv) -> np.ndarray:
    """Row-wise tensor product ``Z[q, i*n + j] = Lu[q, i] Lv[q, j]``."""
    Q, n = Lu.shape
    return (Lu[:, :, None] * Lv[:, None, :]).reshape(Q, n * n)


@lru_cache(maxsize=4096)
def _self_rule_cached(n: int, i: int, j: int, n_rad: int, n_ang: int):
    x = cheb_nodes(n)
    u, v, w = polar_rule(float(x[i]), float(x[j]), n_rad, n_ang)
    Z = khatri_rao(interp_matrix(n, u), interp_matrix(n, v))
    for arr in (u, v, w, Z):
        arr.setflags(write=False)
    return u, v, w, Z


def self_rule(n: int, i: int, j: int, n_rad: int = 12, n_ang: int = 16):
    """Cached polar rule centred at grid node ``(i, j)``.

    Returns ``(u, v, w, Z)`` with ``Z`` the interpolation matrix from the
    ``n x n`` grid to the rule points (see :func:`khatri_rao`).
    """
    return _self_rule_cached(n, i, j, n_rad, n_ang)


def contract(kvals, w, Z) -> np.ndarray:
    """Collapse kernel samples at rule points onto grid-node weights.

    Parameters
    ----------
    kvals : ndarray, shape (K, Q)
        Kernel values at the ``Q`` rule points.
    w : ndarray, shape (Q,)
        Rule weights including the surface Jacobian.
    Z : ndarray, shape (Q, n*n)
        Interpolation matrix of the rule points.

    Returns
    -------
    ndarray, shape (K, n*n)
        ``W[k, :] = sum_q kvals[k, q] w[q] Z[q, :]``.
    """
    c = np.asarray(kvals * w[None, :], dtype=complex)
    K, Q = c.shape
    pairs = np.ascontiguousarray(np.moveaxis(c.view(float).reshape(K, Q, 2), 2, 1)).reshape(2 * K, Q)
    res = (pairs @ Z).reshape(K, 2, -1)
    return res[:, 0] + 1j * res[:, 1]


def tensor_upsample(n: int, m: int):
    """Fejér rule with ``m`` points per direction plus the ``n``-to-``m`` interpolation matrix."""
    x, w = fejer_rule(m)
    return x, w, interp_matrix(n, x)
