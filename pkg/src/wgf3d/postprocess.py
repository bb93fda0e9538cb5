"""Field reconstruction from solved densities and derived quantities.

Fields are evaluated with the windowed representation formulas consistent
with the solve.  Points closer than ``clearance`` patch diameters to the
surface (or to ``Gamma_perp`` for Type II problems) are flagged: their values
are still computed but they are excluded from error norms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .excitation import BoundMode, Excitation, SurfaceDensity
from .nearfield import NearParams, surface_distance
from .operators import MaterialPair, PotentialEvaluator


@dataclass
class FieldGrid:
    """Fields on a set of points.

    Attributes
    ----------
    points : ndarray, shape (P, 3)
    E, H : ndarray, shape (P, 3), complex
    region : ndarray of str, shape (P,)
        ``"i"`` inside the core, ``"e"`` outside.
    flagged : ndarray of bool, shape (P,)
        Points inside the excluded near-surface zone.
    weights : ndarray, shape (P,), optional
        Quadrature weights when the points sample a cross-section.
    """

    points: np.ndarray
    E: np.ndarray
    H: np.ndarray
    region: np.ndarray
    flagged: np.ndarray
    weights: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def S(self) -> np.ndarray:
        return poynting(self.E, self.H)


def poynting(E, H):
    """Time-averaged Poynting vector ``Re(E x conj(H)) / 2``."""
    return 0.5 * np.real(np.cross(E, np.conj(H)))


def classify(mesh, points):
    """``"i"`` for points inside the interior domain, ``"e"`` otherwise.

    Uses the mesh's geometric test when available and otherwise the Laplace
    double-layer solid angle (``-1`` inside, ``0`` outside a closed surface).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if getattr(mesh, "inside", None) is not None:
        ins = mesh.inside(pts)
    else:
        d = pts[:, None, :] - mesh.points[None, :, :]
        R = np.linalg.norm(d, axis=2)
        D = np.sum(mesh.weights * np.einsum("pnk,nk->pn", d, mesh.normals) / (4 * np.pi * R**3), axis=1)
        ins = D < -0.5
    return np.where(ins, "i", "e")


def near_flags(meshes, points, clearance: float):
    """True where a point lies within ``clearance`` patch diameters of any mesh."""
    pts = np.atleast_2d(points)
    flag = np.zeros(len(pts), dtype=bool)
    for m in meshes:
        if m is None:
            continue
        dist, diam = surface_distance(m, pts)
        flag |= dist < clearance * diam
    return flag


def _rep(mesh, mat, pts, m, j, params):
    if len(pts) == 0:
        return np.zeros((0, 3), complex), np.zeros((0, 3), complex)
    ev = PotentialEvaluator(mesh, mat.k, pts, params)
    return ev.field(m, j, mat)


def eval_fields(solution: SurfaceDensity, excitation: Excitation, mesh, points, materials: MaterialPair,
                window=None, gamma_perp=None, inc: SurfaceDensity | None = None, clearance: float = 0.15,
                params: NearParams | None = None, add_incident: bool = True) -> FieldGrid:
    """Fields at ``points`` from the solved densities.

    Parameters
    ----------
    solution : SurfaceDensity
        Solved unknowns on ``mesh``.
    excitation : Excitation
    mesh : SurfaceMesh
    points : ndarray, shape (P, 3)
    materials : MaterialPair
    window : ndarray, optional
        Source weights used in the solve (default ``mesh.window``).
    gamma_perp : SurfaceMesh, optional
        Cross-section disc, required for bound-mode excitations.
    inc : SurfaceDensity, optional
        Split-off mode traces returned by :func:`rhs_type2`.
    add_incident : bool
        Return total fields (default) or scattered fields only (Type I).

    Returns
    -------
    FieldGrid
        Type I: scattered field outside plus the incident wave and the
        interior field inside. Type II: total field everywhere.
    """
    from .muller import perp_data, perp_potentials

    pts = np.atleast_2d(np.asarray(points, dtype=float))
    P = len(pts)
    W = mesh.window if window is None else np.asarray(window)
    region = classify(mesh, pts)
    E = np.zeros((P, 3), complex)
    H = np.zeros((P, 3), complex)
    ii, ee = region == "i", region == "e"
    dens = solution.scaled(W)
    if isinstance(excitation, BoundMode):
        if gamma_perp is None or inc is None:
            raise ValueError("bound-mode fields need gamma_perp and the split-off traces")
        tot = dens + inc
        for msk, mat, sgn in ((ii, materials.interior, 1.0), (ee, materials.exterior, -1.0)):
            Er, Hr = _rep(mesh, mat, pts[msk], sgn * tot.m, sgn * tot.j, params)
            E[msk], H[msk] = Er, Hr
        perp = perp_potentials(perp_data(excitation, gamma_perp), materials, pts, params)
        (Fi, FHi), (Fe, FHe) = perp["i"], perp["e"]
        E[ii] -= Fi[ii]
        H[ii] -= FHi[ii]
        E[ee] -= Fe[ee]
        H[ee] -= FHe[ee]
        # the half-space beyond the cut carries the launched mode itself
        beyond = excitation.siw.axial(pts) >= gamma_perp.cut_position
        if beyond.any():
            Em, Hm = excitation.fields(pts[beyond])
            E[beyond] += Em
            H[beyond] += Hm
        flagged = near_flags([mesh, gamma_perp], pts, clearance)
    else:
        Er, Hr = _rep(mesh, materials.interior, pts[ii], dens.m, dens.j, params)
        E[ii], H[ii] = Er, Hr
        Er, Hr = _rep(mesh, materials.exterior, pts[ee], -dens.m, -dens.j, params)
        E[ee], H[ee] = Er, Hr
        if add_incident and ee.any():
            Ei, Hi = excitation.fields(pts[ee], materials.exterior)
            E[ee] += Ei
            H[ee] += Hi
        flagged = near_flags([mesh], pts, clearance)
    return FieldGrid(pts, E, H, region, flagged)


def disc_points(center, axis, radius: float, core_radius: float | None = None, n_rad: int = 24,
                n_ang: int = 32):
    """Gauss-Legendre points and weights on a disc orthogonal to ``axis``.

    With ``core_radius`` the radial rule is split at that radius so that the
    field discontinuity at the core boundary falls between panels.

    Returns
    -------
    points : ndarray, shape (P, 3)
    weights : ndarray, shape (P,)
    """
    ax = np.asarray(axis, float)
    ax = ax / np.linalg.norm(ax)
    t = np.array([1.0, 0.0, 0.0]) if abs(ax[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(ax, t)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(ax, e1)
    edges = [0.0, radius] if core_radius is None else [0.0, core_radius, radius]
    if core_radius is not None and radius > 3 * core_radius:
        edges = [0.0, core_radius, 2 * core_radius, 3 * core_radius, radius]
    x, w = np.polynomial.legendre.leggauss(n_rad)
    rs, wr = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        rs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        wr.append(0.5 * (b - a) * w)
    r = np.concatenate(rs)
    wr = np.concatenate(wr) * r
    ph = 2 * np.pi * np.arange(n_ang) / n_ang
    R, PH = np.meshgrid(r, ph, indexing="ij")
    WR = np.repeat(wr, n_ang) * (2 * np.pi / n_ang)
    pts = (np.asarray(center, float)[None, :] + R.ravel()[:, None] * np.cos(PH.ravel())[:, None] * e1
           + R.ravel()[:, None] * np.sin(PH.ravel())[:, None] * e2)
    return pts, WR


def flux_through_disc(grid: FieldGrid, axis, weights=None) -> float:
    """Power ``int S . axis`` through a cross-section sampled by ``grid``."""
    w = grid.weights if weights is None else np.asarray(weights)
    if w is None:
        raise ValueError("flux needs quadrature weights")
    ax = np.asarray(axis, float)
    ax = ax / np.linalg.norm(ax)
    return float(np.sum(w * (grid.S @ ax)))


def error_vs_reference(grid: FieldGrid, E_ref, H_ref=None, mask=None) -> dict:
    """Maximum errors of ``grid`` against reference fields over unflagged points.

    Returns
    -------
    dict with ``"E_abs"``, ``"E_rel"`` (relative to ``max |E_ref|``),
    ``"H_rel"`` when ``H_ref`` is given and ``"points"``, the number used.
    """
    keep = ~grid.flagged if mask is None else (~grid.flagged & mask)
    if not keep.any():
        raise ValueError("no unflagged points to compare")
    dE = np.linalg.norm(grid.E[keep] - E_ref[keep], axis=1)
    scale = np.max(np.linalg.norm(E_ref[keep], axis=1))
    out = {"E_abs": float(dE.max()), "E_rel": float(dE.max() / scale), "points": int(keep.sum())}
    if H_ref is not None:
        dH = np.linalg.norm(grid.H[keep] - H_ref[keep], axis=1)
        out["H_rel"] = float(dH.max() / np.max(np.linalg.norm(H_ref[keep], axis=1)))
    return out


def error_vs_mode(grid: FieldGrid, excitation: BoundMode, axial_range=None) -> dict:
    """Compare a Type II solution with the launched mode itself.

    For a uniform guide the exact total field is the mode. ``axial_range``
    ``(lo, hi)`` restricts the points by their coordinate along the mode's
    propagation direction ``-c``, measured from the SIW origin.
    """
    E_ref, H_ref = excitation.fields(grid.points)
    mask = None
    if axial_range is not None:
        s = -excitation.siw.axial(grid.points)
        mask = (s >= axial_range[0]) & (s <= axial_range[1])
    return error_vs_reference(grid, E_ref, H_ref, mask)


_CSV_HEADER = ["x", "y", "z", "region", "flagged"] + [
    f"{p}{f}{c}" for f in ("E", "H") for c in "xyz" for p in ("Re", "Im")] + ["Sx", "Sy", "Sz"]


def write_csv(grid: FieldGrid, path) -> None:
    """Write points, region, flags, field components and the Poynting vector."""
    S = grid.S
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_HEADER)
        for p in range(len(grid.points)):
            row = list(map(float, grid.points[p])) + [str(grid.region[p]), int(grid.flagged[p])]
            for F in (grid.E, grid.H):
                for c in range(3):
                    row += [float(F[p, c].real), float(F[p, c].imag)]
            row += list(map(float, S[p]))
            w.writerow(row)


def read_csv(path) -> FieldGrid:
    """Inverse of :func:`write_csv` (Poynting columns are recomputed)."""
    rows = list(csv.reader(open(path)))
    body = rows[1:]
    pts = np.array([[float(v) for v in r[:3]] for r in body])
    region = np.array([r[3] for r in body])
    flagged = np.array([bool(int(r[4])) for r in body])
    vals = np.array([[float(v) for v in r[5:17]] for r in body])
    E = vals[:, 0:6:2] + 1j * vals[:, 1:6:2]
    H = vals[:, 6:12:2] + 1j * vals[:, 7:12:2]
    return FieldGrid(pts, E, H, region, flagged)
