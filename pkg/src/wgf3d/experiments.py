"""End-to-end problem drivers shared by the command line, scripts and tests.

Each driver takes a :class:`~wgf3d.config.RunConfig`, builds the geometry,
solves and returns plain dictionaries of metrics (JSON-serializable) plus
the heavy objects needed for further field evaluation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .excitation import Beam, BoundMode, Dipole, PlaneWave
from .geometry import build_bend, build_circular_guide, build_gamma_perp, build_sphere
from .kernels import Material
from .mie import MieSphere
from .modes import solve_modes
from .muller import MullerOperator, SolverConfig, rhs_type1, rhs_type2, solve
from .operators import MaterialPair, MullerTables
from .postprocess import disc_points, error_vs_mode, eval_fields, flux_through_disc
from .windowing import WindowParams

log = logging.getLogger(__name__)


def materials_of(cfg: RunConfig) -> MaterialPair:
    m = cfg.materials
    return MaterialPair(Material(m.n_clad**2, 1.0), Material(m.n_core**2, 1.0))


def guide_radius(cfg: RunConfig) -> float:
    """Core radius: explicit, or from ``V = k0 a sqrt(n_core^2 - n_clad^2)``."""
    g, m = cfg.geometry, cfg.materials
    if g.radius > 0:
        return g.radius
    return g.V / (2 * np.pi * np.sqrt(m.n_core**2 - m.n_clad**2))


def fundamental_mode(cfg: RunConfig):
    mats = materials_of(cfg)
    modes = solve_modes(mats.interior, mats.exterior, guide_radius(cfg), m_az_max=cfg.modes.m_az_max)
    if not modes:
        raise ValueError("the guide supports no bound mode")
    return modes[0]


def window_size(cfg: RunConfig, mode=None) -> float:
    w = cfg.window
    if w.A_unit == "lambda0":
        return w.A
    mode = mode or fundamental_mode(cfg)
    return w.A * mode.wavelength


SINGLE_PRECISION_TOL = 1e-6


def solver_config(cfg: RunConfig) -> SolverConfig:
    """Solver settings; single-precision tables cannot resolve residuals below ``SINGLE_PRECISION_TOL``."""
    s = cfg.solver
    tol = max(s.tol, SINGLE_PRECISION_TOL) if cfg.discretization.dtype == "complex64" else s.tol
    return SolverConfig(tol=tol, max_iter=s.max_iter, restart=s.restart)


@dataclass
class GuideSetup:
    """Geometry, materials and excitation of a Type II waveguide problem."""

    mesh: object
    gamma_perp: object
    excitation: BoundMode
    materials: MaterialPair
    mode: object
    A: float
    radius: float


def setup_guide(cfg: RunConfig) -> GuideSetup:
    """Build the truncated surface, the incident-SIW disc and the bound-mode excitation."""
    mats = materials_of(cfg)
    a = guide_radius(cfg)
    mode = fundamental_mode(cfg)
    A = window_size(cfg, mode)
    wp = WindowParams(A, cfg.window.alpha)
    d, g = cfg.discretization, cfg.geometry
    if g.shape == "guide":
        L = 2 * A + g.extra_length * A
        z0 = -0.5 * L
        ax = max(1, int(round(L / (d.axial_patch_length * mode.wavelength))))
        mesh = build_circular_guide(a, z0, z0 + L, ("min", "max"), ax, d.azimuthal_patches, d.degree, wp)
    elif g.shape == "terminated":
        L = A + max(g.extra_length, 0.0) * A
        ax = max(1, int(round(L / (d.axial_patch_length * mode.wavelength))))
        mesh = build_circular_guide(a, -L, 0.0, ("min",), ax, d.azimuthal_patches, d.degree, wp)
    elif g.shape == "bend":
        mesh = build_bend(a, g.bend_radius, g.straight * A, d.degree, window=wp,
                          straight_patches=max(1, int(round(g.straight * A / (d.axial_patch_length * mode.wavelength)))))
    else:
        raise ValueError(f"shape {g.shape!r} is not a waveguide")
    siw = mesh.siws[0]
    gp = build_gamma_perp(siw, A, d.R_max, a, degree=d.perp_degree, decay_rate=mode.decay_rate)
    exc = BoundMode(mode, siw, cfg.excitation.mode_polarization, cfg.excitation.amplitude)
    return GuideSetup(mesh, gp, exc, mats, mode, A, a)


def tables_for(mesh, mats, cfg: RunConfig) -> MullerTables:
    dtype = np.complex64 if cfg.discretization.dtype == "complex64" else complex
    return MullerTables(mesh, mats, dtype=dtype)


def solve_guide(setup: GuideSetup, tables: MullerTables, cfg: RunConfig, windowed: bool = True, rhs=None):
    """Type II solve; returns ``(solution, split-off traces, report, window used)``."""
    if rhs is None:
        rhs = rhs_type2(setup.excitation, setup.mesh, setup.gamma_perp, setup.materials, tables)
    b, inc = rhs
    W = setup.mesh.window if windowed else np.ones(setup.mesh.size)
    sol, rep = solve(MullerOperator(tables, window=W), b, solver_config(cfg))
    return sol, inc, rep, W


def axis_points(setup: GuideSetup, count: int = 25, offset: float = 0.0):
    """Points on the guide axis over the central third of the truncated guide."""
    A = setup.A
    z = np.linspace(-A / 3, A / 3, count)
    return np.stack([np.full_like(z, offset), np.zeros_like(z), z], axis=1)


def uniform_guide_metrics(setup: GuideSetup, tables, cfg: RunConfig, unwindowed: bool = False,
                          flux_planes=None, flux_radius: float = 2.5) -> dict:
    """Axis error against the exact mode, optionally with the abruptly truncated solve and fluxes."""
    out = {"A": setup.A, "unknowns": 4 * setup.mesh.size}
    rhs = rhs_type2(setup.excitation, setup.mesh, setup.gamma_perp, setup.materials, tables)
    pts = axis_points(setup)
    runs = [("windowed", True)] + ([("unwindowed", False)] if unwindowed else [])
    for label, win in runs:
        sol, inc, rep, W = solve_guide(setup, tables, cfg, win, rhs)
        grid = eval_fields(sol, setup.excitation, setup.mesh, pts, setup.materials, window=W,
                           gamma_perp=setup.gamma_perp, inc=inc)
        err = error_vs_mode(grid, setup.excitation)
        out[label] = {"axis_error": err["E_rel"], "axis_error_H": err["H_rel"], "solver": rep.as_dict()}
        if win and flux_planes is not None:
            fl = []
            for z0 in flux_planes:
                P, w = disc_points((0.0, 0.0, z0), (0.0, 0.0, 1.0), flux_radius, core_radius=setup.radius)
                g = eval_fields(sol, setup.excitation, setup.mesh, P, setup.materials, window=W,
                                gamma_perp=setup.gamma_perp, inc=inc)
                fl.append(flux_through_disc(g, (0.0, 0.0, 1.0), w))
            out[label]["fluxes"] = fl
            out[label]["flux_mismatch"] = abs(fl[0] - fl[1]) / abs(fl[0])
    return out


def cylinder_points(center, radius, z0, z1, n_z=12, n_phi=32, panels=2):
    """Gauss points and outward-normal weights on the lateral surface of a z-aligned cylinder."""
    x, w = np.polynomial.legendre.leggauss(n_z)
    edges = np.linspace(z0, z1, panels + 1)
    zs = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    wz = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    Z, PH = np.meshgrid(zs, ph, indexing="ij")
    nrm = np.stack([np.cos(PH.ravel()), np.sin(PH.ravel()), np.zeros(PH.size)], axis=1)
    pts = np.asarray(center, float)[None, :] + radius * nrm + Z.ravel()[:, None] * np.array([0.0, 0.0, 1.0])
    wts = np.repeat(wz, n_phi) * radius * 2 * np.pi / n_phi
    return pts, wts, nrm


def terminated_energy(setup: GuideSetup, tables, cfg: RunConfig, margin: float = 1.0) -> dict:
    """Power balance of a capped guide over a closed can around the termination.

    The can consists of a disc across the incident guide at the SIW origin,
    a coaxial cylinder of radius ``a + margin`` and a top disc ``margin``
    above the cap. The launched mode carries unit power; the returned
    ``outgoing`` is reflected plus radiated power,
    ``(1 - net flux through the bottom disc) + flux out of the side and top``.
    """
    sol, inc, rep, W = solve_guide(setup, tables, cfg, True)
    a, mesh = setup.radius, setup.mesh
    z_bot = float(setup.excitation.siw.o[2])
    z_top = float(mesh.points[:, 2].max()) + margin
    Rc = a + margin

    def fields(P):
        return eval_fields(sol, setup.excitation, mesh, P, setup.materials, window=W,
                           gamma_perp=setup.gamma_perp, inc=inc)

    Pb, wb = disc_points((0.0, 0.0, z_bot), (0.0, 0.0, 1.0), Rc, core_radius=a)
    net = flux_through_disc(fields(Pb), (0.0, 0.0, 1.0), wb)
    Ps, ws, ns = cylinder_points((0.0, 0.0, 0.0), Rc, z_bot, z_top, panels=3)
    gs = fields(Ps)
    side = float(np.sum(ws * np.sum(gs.S * ns, axis=1)))
    Pt, wt = disc_points((0.0, 0.0, z_top), (0.0, 0.0, 1.0), Rc, n_rad=16)
    top = flux_through_disc(fields(Pt), (0.0, 0.0, 1.0), wt)
    incident = 1.0 * abs(setup.excitation.amplitude) ** 2
    reflected = incident - net
    return {"incident": incident, "net_through_guide": net, "reflected_and_back": reflected,
            "radiated_side": side, "radiated_top": top, "outgoing": reflected + side + top,
            "solver": rep.as_dict()}


def excitation_of(cfg: RunConfig):
    e = cfg.excitation
    if e.kind == "plane":
        return PlaneWave(e.direction, e.polarization, e.amplitude)
    if e.kind == "dipole":
        return Dipole(e.location, e.moment)
    if e.kind == "beam":
        return Beam(e.focus, e.direction, e.polarization, e.waist)
    raise ValueError("mode excitations need setup_guide")


def sphere_mie_metrics(cfg: RunConfig, radius: float = 0.5, eval_radius: float = 1.5, n_points: int = 200,
                       seed: int = 0) -> dict:
    """Type I plane-wave scattering by a sphere compared with the Mie series.

    Returns the relative L2 errors of the scattered ``E`` and ``H`` on random
    points of the sphere of radius ``eval_radius`` and the solver report.
    """
    mats = materials_of(cfg)
    mesh = build_sphere(radius, cfg.discretization.patches_per_face, cfg.discretization.degree)
    tables = tables_for(mesh, mats, cfg)
    exc = PlaneWave((0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
    sol, rep = solve(MullerOperator(tables), rhs_type1(exc, mesh, mats), solver_config(cfg))
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(n_points, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    P = eval_radius * u
    grid = eval_fields(sol, exc, mesh, P, mats, add_incident=False)
    mie = MieSphere(radius, mats.exterior, mats.interior)
    Es, Hs = mie.scattered(P)
    l2 = lambda X, Y: float(np.linalg.norm(X - Y) / np.linalg.norm(Y))
    return {"unknowns": 4 * mesh.size, "E_rel_L2": l2(grid.E, Es), "H_rel_L2": l2(grid.H, Hs),
            "solver": rep.as_dict(), "mesh": mesh, "solution": sol}


__all__ = [
    "GuideSetup", "setup_guide", "solve_guide", "uniform_guide_metrics", "terminated_energy",
    "sphere_mie_metrics", "materials_of", "guide_radius", "fundamental_mode", "window_size",
    "excitation_of", "tables_for", "axis_points", "cylinder_points", "solver_config",
]
