"""One-dimensional windowed-truncation study.

The model integral is ``I = int_1^inf exp(-i kappa z) z**-0.5 dz`` with
``kappa = k0 - kz``.  Plain truncation at ``z = A`` converges like
``1/(kappa sqrt(A))`` while multiplying the integrand by the slow-rise window
gives super-algebraic convergence in ``A``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .windowing import WindowParams, eval_w


class ToyDomainError(ValueError):
    """Raised when the net oscillation ``k0 - kz`` does not give a convergent tail."""


class ToyAccuracyError(RuntimeError):
    """Raised when the composite rule fails its doubling self-check."""


@dataclass(frozen=True)
class ToyParams:
    """Parameters of the model integral.

    Parameters
    ----------
    k0 : float
        Reference wavenumber.
    kz : float
        Wavenumber of the density oscillation, ``0 <= kz < k0``.
    A_values : tuple of float
        Ascending window sizes, all greater than one.
    alpha : float
        Rise fraction of the window.
    """

    k0: float = 2 * np.pi
    kz: float = 0.2 * np.pi
    A_values: tuple = field(default_factory=lambda: tuple(np.logspace(0.5, 4, 36)))
    alpha: float = 0.5

    def __post_init__(self):
        if not self.k0 > 0:
            raise ToyDomainError("k0 must be positive")
        if not (0 <= self.kz < self.k0):
            raise ToyDomainError("kz must satisfy 0 <= kz < k0")
        a = np.asarray(self.A_values, dtype=float)
        if a.size and (np.any(a <= 1) or np.any(np.diff(a) <= 0)):
            raise ToyDomainError("A_values must be strictly ascending and > 1")
        object.__setattr__(self, "A_values", tuple(float(x) for x in a))

    @property
    def kappa(self) -> float:
        return self.k0 - self.kz

    @property
    def net_wavelength(self) -> float:
        return 2 * np.pi / abs(self.kappa)


def toy_reference(k0: float, kz: float) -> complex:
    """Closed-form value of the model integral.

    Uses the half-line value ``sqrt(pi/kappa) exp(-i pi/4)`` minus the finite
    part ``int_0^1``, the latter written as ``2 int_0^1 exp(-i kappa t^2) dt``
    to remove the endpoint singularity and evaluated adaptively.
    """
    kappa = k0 - kz
    if not kappa > 0:
        raise ToyDomainError(f"kappa = k0 - kz must be positive, got {kappa!r}")
    limit = 200 + int(4 * kappa)
    re, _ = integrate.quad(lambda t: 2 * np.cos(kappa * t * t), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=limit)
    im, _ = integrate.quad(lambda t: -2 * np.sin(kappa * t * t), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=limit)
    half_line = np.sqrt(np.pi / kappa) * np.exp(-0.25j * np.pi)
    return complex(half_line - (re + 1j * im))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _composite(f, a: float, b: float, n_panels: int) -> complex:
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    z = mid[:, None] + half[:, None] * _GL_X[None, :]
    return complex(np.sum(f(z) * (half[:, None] * _GL_W[None, :])))


def _integrate_checked(f, a: float, b: float, kappa: float, feature: float = np.inf) -> complex:
    if b <= a:
        return 0.0 + 0.0j
    h = min(2 * np.pi / kappa, feature)
    n = max(2, int(np.ceil((b - a) / h)))
    coarse = _composite(f, a, b, n)
    fine = _composite(f, a, b, 2 * n)
    if abs(fine - coarse) > 1e-10:
        raise ToyAccuracyError(f"doubling check failed: |dI| = {abs(fine - coarse):.2e}")
    return fine


def _integrand(kappa: float):
    return lambda z: np.exp(-1j * kappa * z) / np.sqrt(z)


def toy_truncated(A: float, params: ToyParams) -> complex:
    """Plainly truncated integral ``int_1^A``."""
    return _integrate_checked(_integrand(params.kappa), 1.0, float(A), params.kappa)


def toy_windowed(A: float, params: ToyParams, unit_window: bool = False) -> complex:
    """Windowed integral ``int_1^A w_A(z) exp(-i kappa z) z**-0.5 dz``.

    Parameters
    ----------
    unit_window : bool
        Replace the window by one, which must reproduce :func:`toy_truncated`.
    """
    base = _integrand(params.kappa)
    if unit_window:
        return _integrate_checked(base, 1.0, float(A), params.kappa)
    wp = WindowParams(A=float(A), alpha=params.alpha)
    rise = (1 - params.alpha) * float(A) / 8
    return _integrate_checked(lambda z: base(z) * eval_w(z, wp), 1.0, float(A), params.kappa, rise)


def local_orders(A, err) -> np.ndarray:
    """Local convergence orders ``-d log(err) / d log(A)`` from sliding triplets.

    Each interior point gets the least-squares slope through itself and its
    two neighbours; endpoints are NaN.
    """
    x = np.log(np.asarray(A, dtype=float))
    y = np.log(np.maximum(np.asarray(err, dtype=float), 1e-300))
    out = np.full(x.size, np.nan)
    for i in range(1, x.size - 1):
        out[i] = -np.polyfit(x[i - 1:i + 2], y[i - 1:i + 2], 1)[0]
    return out


@dataclass
class ToyTable:
    """Per-A errors and local orders."""

    A: np.ndarray
    normA: np.ndarray
    err_tr: np.ndarray
    err_w: np.ndarray
    order_tr: np.ndarray
    order_w: np.ndarray
    kz: float
    k0: float

    def rows(self):
        for i in range(self.A.size):
            yield (self.A[i], self.normA[i], self.err_tr[i], self.err_w[i], self.order_tr[i], self.order_w[i])


def convergence_study(params: ToyParams) -> ToyTable:
    """Errors of the truncated and windowed integrals over ``params.A_values``."""
    A = np.asarray(params.A_values)
    if A.size < 4:
        raise ToyDomainError("convergence_study needs at least 4 window sizes")
    ref = toy_reference(params.k0, params.kz)
    err_tr = np.array([abs(toy_truncated(a, params) - ref) for a in A])
    err_w = np.array([abs(toy_windowed(a, params) - ref) for a in A])
    return ToyTable(
        A=A,
        normA=A * abs(params.kappa) / (2 * np.pi),
        err_tr=err_tr,
        err_w=err_w,
        order_tr=local_orders(A, err_tr),
        order_w=local_orders(A, err_w),
        kz=params.kz,
        k0=params.k0,
    )


TOY_COLUMNS = ("A", "normA", "err_tr", "err_w", "order_tr", "order_w")


def write_toy_csv(path, table: ToyTable) -> None:
    """Write a study table with the columns of ``TOY_COLUMNS``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TOY_COLUMNS)
        for row in table.rows():
            writer.writerow([f"{v:.12e}" for v in row])
