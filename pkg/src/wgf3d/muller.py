"""Windowed Müller system: operator, right-hand sides and iterative solve.

Unknowns are the interior-convention densities ``m = -n x E_i`` and
``j = -n x H_i`` on the truncated surface, stored as the frame components
``[m1, m2, j1, j2]``.  The windowed operator reads

    E-row:  m + R^D_eps [W m] + K^D_eps [W j]
    H-row:  j + R^D_mu  [W j] - K^D_mu  [W m]

with ``W`` the surface window.  Type I right-hand sides use the incident
traces directly.  Type II right-hand sides split off ``chi`` times the mode
traces and replace the omitted semi-infinite tail by integrals over the
cross-section disc ``Gamma_perp``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .excitation import (BoundMode, Excitation, ExcitationConfigurationError, SurfaceDensity,
                         check_incidence, incident_traces)
from .nearfield import NearParams
from .operators import MaterialPair, MullerTables, OperatorStateError, PotentialEvaluator, _frame_to_cart

log = logging.getLogger(__name__)


class SolveError(RuntimeError):
    """Raised when GMRES does not reach the requested tolerance.

    Attributes
    ----------
    report : SolveReport
    """

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass
class SolverConfig:
    """GMRES controls.

    Parameters
    ----------
    tol : float
        Relative residual target.
    max_iter : int
        Upper bound on the total number of inner iterations.
    restart : int
        Krylov subspace size between restarts.
    """

    tol: float = 1e-8
    max_iter: int = 600
    restart: int = 200


@dataclass
class SolveReport:
    """Outcome of an iterative solve."""

    converged: bool
    iterations: int
    residual: float
    unknowns: int
    wall_time: float
    history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
            "unknowns": self.unknowns,
            "wall_time": self.wall_time,
        }


class MullerOperator:
    """Matrix-free windowed Müller operator of size ``4N``.

    Parameters
    ----------
    tables : MullerTables
    window : ndarray, shape (N,), optional
        Source weights; defaults to ``tables.mesh.window``. Passing ones gives
        the abruptly truncated operator.
    """

    def __init__(self, tables: MullerTables, window=None):
        self.tables = tables
        self.mesh = tables.mesh
        self.materials = tables.materials
        N = self.mesh.size
        self.window = self.mesh.window if window is None else np.asarray(window, dtype=float)
        if self.window.shape != (N,):
            raise OperatorStateError("window must have one value per mesh node")
        self.shape = (4 * N, 4 * N)
        self.ce, self.cke, self.ee, self.ei = self.materials.coefficients("eps")
        self.cm, self.ckm, self.me, self.mi = self.materials.coefficients("mu")
        self.matvecs = 0

    @property
    def size(self) -> int:
        return self.shape[0]

    def _split(self, x):
        N = self.mesh.size
        m = np.stack([x[:N], x[N:2 * N]], axis=1)
        j = np.stack([x[2 * N:3 * N], x[3 * N:]], axis=1)
        return m, j

    def apply_parts(self, mf, jf, window):
        """``(R^D_eps m + K^D_eps j, R^D_mu j - K^D_mu m)`` for frame densities, weighted by ``window``."""
        t = self.tables
        w = window[:, None]
        af = np.stack([mf * w, jf * w], axis=2)  # (N, 2, 2)
        cart = _frame_to_cart(self.mesh, af)
        div = np.stack([self.mesh.surface_div(cart[:, :, q]) for q in range(2)], axis=1)
        re = t.R_frame("e", af)
        ri = t.R_frame("i", af)
        kb = t.K_parts(cart, div)
        ym = self.ce * (self.ee * re[:, :, 0] - self.ei * ri[:, :, 0]) + self.cke * kb[:, :, 1]
        yj = self.cm * (self.me * re[:, :, 1] - self.mi * ri[:, :, 1]) - self.ckm * kb[:, :, 0]
        return ym, yj

    def matvec(self, x):
        x = np.asarray(x).ravel()
        if x.shape[0] != self.shape[0]:
            raise OperatorStateError(f"vector of length {x.shape[0]} for operator of size {self.shape[0]}")
        self.matvecs += 1
        mf, jf = self._split(x)
        ym, yj = self.apply_parts(mf, jf, self.window)
        ym += mf
        yj += jf
        return np.concatenate([ym[:, 0], ym[:, 1], yj[:, 0], yj[:, 1]])

    def __matmul__(self, x):
        return self.matvec(x)

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.matvec, dtype=complex)


def rhs_type1(exc: Excitation, mesh, materials: MaterialPair, strict: bool = True) -> SurfaceDensity:
    """Right-hand side for an incident field living in the exterior medium.

    Returns ``(c_eps eps_e E^inc x n, c_mu mu_e H^inc x n)`` with
    ``c_alpha = 2 / (alpha_e + alpha_i)``.

    Raises
    ------
    ExcitationConfigurationError
        For Type II excitations, interior sources, or (when ``strict``) a
        propagation direction not pointing along every SIW axis.
    """
    if exc.kind != "type1":
        raise ExcitationConfigurationError("rhs_type1 needs a Type I excitation; use rhs_type2 for bound modes")
    if exc.side != "e":
        raise ExcitationConfigurationError("Type I excitations must live in the exterior medium")
    check_incidence(exc, mesh.siws, strict)
    ce, _, ee, _ = materials.coefficients("eps")
    cm, _, me, _ = materials.coefficients("mu")
    tr = incident_traces(exc, mesh, "exterior", materials, strict=False)  # (n x E, n x H)
    return SurfaceDensity(-ce * ee * tr.m, -cm * me * tr.j)


@dataclass
class PerpData:
    """Mode data on the cross-section disc and its potentials at the surface nodes."""

    mesh: object
    core: object
    clad: object
    m_core: np.ndarray
    j_core: np.ndarray
    m_clad: np.ndarray
    j_clad: np.ndarray


def _subset(mesh, region):
    from .geometry import SurfaceMesh

    keep = [p for p in range(mesh.npatch) if mesh.region[mesh.patch_slice(p)][0] == region]
    sub = SurfaceMesh([mesh.patches[p] for p in keep], mesh.n)
    return sub


def perp_data(exc: BoundMode, gamma_perp) -> PerpData:
    """Split ``Gamma_perp`` into core and cladding parts with the densities ``c x E``, ``c x H``."""
    if getattr(gamma_perp, "region", None) is None:
        raise ExcitationConfigurationError("Gamma_perp mesh needs region labels")
    core, clad = _subset(gamma_perp, "i"), _subset(gamma_perp, "e")
    c = exc.siw.c
    out = []
    for sub in (core, clad):
        E, H = exc.fields(sub.points)
        out += [np.cross(c[None, :], E), np.cross(c[None, :], H)]
    return PerpData(gamma_perp, core, clad, *out)


def perp_potentials(pd: PerpData, materials: MaterialPair, points, params: NearParams | None = None,
                    chunk: int = 1024) -> dict:
    """Disc potentials ``F_l`` (electric) and ``F^H_l`` (magnetic) at ``points`` for ``l`` in ``{i, e}``.

    Targets are processed in blocks of ``chunk`` to bound the table memory.
    """
    pts = np.atleast_2d(points)
    res = {}
    for lbl, sub, m, j, mat in (("i", pd.core, pd.m_core, pd.j_core, materials.interior),
                                ("e", pd.clad, pd.m_clad, pd.j_clad, materials.exterior)):
        E = np.zeros((len(pts), 3), complex)
        H = np.zeros_like(E)
        for s in range(0, len(pts), chunk):
            blk = slice(s, s + chunk)
            ev = PotentialEvaluator(sub, mat.k, pts[blk], params)
            E[blk], H[blk] = ev.field(m, j, mat)
            del ev
        res[lbl] = (E, H)
    return res


def rhs_type2(exc: BoundMode, mesh, gamma_perp, materials: MaterialPair, tables: MullerTables,
              params: NearParams | None = None, perp=None):
    """Right-hand side for a bound mode launched into the structure.

    Parameters
    ----------
    exc : BoundMode
    mesh : SurfaceMesh
        Truncated surface with the window of the incident SIW.
    gamma_perp : SurfaceMesh
        Disc cutting the incident SIW where the window vanishes.
    tables : MullerTables
        Tables of ``mesh``.
    perp : dict, optional
        Precomputed :func:`perp_potentials` at the mesh nodes.

    Returns
    -------
    rhs : SurfaceDensity
    inc : SurfaceDensity
        The split-off traces ``chi (m_mode, j_mode)`` (interior convention).
    """
    if not isinstance(exc, BoundMode):
        raise ExcitationConfigurationError("rhs_type2 needs a BoundMode excitation")
    if tables.mesh is not mesh:
        raise OperatorStateError("tables do not belong to this mesh")
    inc = incident_traces(exc, mesh, "interior")
    op = MullerOperator(tables, window=np.ones(mesh.size))
    mf, jf = mesh.to_frame(inc.m), mesh.to_frame(inc.j)
    ym, yj = op.apply_parts(mf, jf, np.ones(mesh.size))
    fm = -inc.m - mesh.from_frame(ym)
    fj = -inc.j - mesh.from_frame(yj)
    if perp is None:
        perp = perp_potentials(perp_data(exc, gamma_perp), materials, mesh.points, params)
    ce, _, ee, ei = materials.coefficients("eps")
    cm, _, me, mi = materials.coefficients("mu")
    n = mesh.normals
    (Fi, FHi), (Fe, FHe) = perp["i"], perp["e"]
    fm = fm + ce * np.cross(n, ei * Fi + ee * Fe)
    fj = fj + cm * np.cross(n, mi * FHi + me * FHe)
    return SurfaceDensity(fm, fj), inc


def solve(operator: MullerOperator, rhs: SurfaceDensity, config: SolverConfig | None = None,
          raise_on_failure: bool = True):
    """Solve ``operator x = rhs`` with restarted GMRES.

    Returns
    -------
    SurfaceDensity
        Solution densities (Cartesian).
    SolveReport

    Raises
    ------
    SolveError
        If the relative residual stays above ``config.tol`` and
        ``raise_on_failure`` is set.
    """
    cfg = config or SolverConfig()
    mesh = operator.mesh
    b = rhs.to_vector(mesh)
    bn = np.linalg.norm(b)
    N4 = operator.size
    if bn == 0:
        return SurfaceDensity.zeros(mesh.size), SolveReport(True, 0, 0.0, N4, 0.0, [])
    history = []
    t0 = time.perf_counter()
    restart = min(cfg.restart, N4)
    cycles = max(1, int(np.ceil(cfg.max_iter / restart)))
    x, info = gmres(operator.as_linear_operator(), b, rtol=cfg.tol, atol=0.0, restart=restart, maxiter=cycles,
                    callback=lambda r: history.append(float(r)), callback_type="pr_norm")
    wall = time.perf_counter() - t0
    res = float(np.linalg.norm(operator.matvec(x) - b) / bn)
    ok = info == 0 and res <= 10 * cfg.tol
    rep = SolveReport(bool(ok), len(history), res, N4, wall, history)
    log.info("GMRES: %s after %d iterations, residual %.2e, %.1f s", "converged" if ok else "stalled",
             rep.iterations, res, wall)
    if not ok and raise_on_failure:
        raise SolveError(f"GMRES did not converge: residual {res:.3e} after {rep.iterations} iterations", rep)
    return SurfaceDensity.from_vector(mesh, x), rep
