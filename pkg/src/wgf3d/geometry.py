"""Curvilinear quadrilateral patch meshes.

Every patch is an analytic map ``x(u, v)`` of ``[-1, 1]^2`` with
``x_u x x_v`` pointing out of the interior region.  A :class:`SurfaceMesh`
samples each patch on the tensor grid of open Chebyshev points and stores
per-node positions, normals, tangent frames, quadrature weights, window
values and SIW labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import quadrature as quad
from .windowing import SIWDescriptor, WindowParams, eval_W, siw_labels


class GeometryConfigurationError(ValueError):
    """Raised for degenerate or inconsistent geometry requests."""


# ---------------------------------------------------------------------------
# patch charts
# ---------------------------------------------------------------------------


class Patch:
    """Analytic chart of ``[-1, 1]^2``; subclasses define :meth:`_map`."""

    tag = "surface"

    def eval(self, u, v):
        """Return ``(x, x_u, x_v)`` at parameter points (arrays of shape ``(..., 3)``)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self._map(u, v)

    def point(self, u, v):
        return self.eval(u, v)[0]

    def _map(self, u, v):  # pragma: no cover - interface
        raise NotImplementedError


def _stack(*comps):
    return np.stack(np.broadcast_arrays(*comps), axis=-1)


@dataclass
class PlanePatch(Patch):
    """Affine patch ``origin + u*eu + v*ev``."""

    origin: np.ndarray
    eu: np.ndarray
    ev: np.ndarray
    tag: str = "plane"

    def _map(self, u, v):
        o, eu, ev = (np.asarray(a, dtype=float) for a in (self.origin, self.eu, self.ev))
        x = o + u[..., None] * eu + v[..., None] * ev
        xu = np.broadcast_to(eu, x.shape).copy()
        xv = np.broadcast_to(ev, x.shape).copy()
        return x, xu, xv


@dataclass
class CubeSpherePatch(Patch):
    """Equiangular cube-to-sphere patch.

    The face is ``d + a t1 + b t2`` with ``a = tan(pi U / 4)``,
    ``b = tan(pi V / 4)`` and ``(U, V)`` an affine image of ``(u, v)`` in the
    sub-rectangle ``[U0, U1] x [V0, V1]``; the point is projected to the
    sphere of the given centre and radius.
    """

    d: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    center: np.ndarray
    radius: float
    U: tuple = (-1.0, 1.0)
    V: tuple = (-1.0, 1.0)
    tag: str = "sphere"

    def _map(self, u, v):
        U = 0.5 * (self.U[0] + self.U[1]) + 0.5 * (self.U[1] - self.U[0]) * u
        V = 0.5 * (self.V[0] + self.V[1]) + 0.5 * (self.V[1] - self.V[0]) * v
        dU = 0.5 * (self.U[1] - self.U[0])
        dV = 0.5 * (self.V[1] - self.V[0])
        a = np.tan(0.25 * np.pi * U)
        b = np.tan(0.25 * np.pi * V)
        da = 0.25 * np.pi * (1 + a * a) * dU
        db = 0.25 * np.pi * (1 + b * b) * dV
        d, t1, t2 = (np.asarray(z, dtype=float) for z in (self.d, self.t1, self.t2))
        q = d + a[..., None] * t1 + b[..., None] * t2
        nq = np.linalg.norm(q, axis=-1, keepdims=True)
        qh = q / nq
        qa = da[..., None] * t1
        qb = db[..., None] * t2
        xu = self.radius * (qa - qh * np.sum(qh * qa, axis=-1, keepdims=True)) / nq
        xv = self.radius * (qb - qh * np.sum(qh * qb, axis=-1, keepdims=True)) / nq
        x = np.asarray(self.center, dtype=float) + self.radius * qh
        return x, xu, xv


@dataclass
class CylinderPatch(Patch):
    """Patch of a circular cylinder ``o + s t + a (cos phi ea + sin phi eb)``.

    ``u`` maps to ``phi`` in ``[phi0, phi1]`` and ``v`` to the axial
    coordinate ``s`` in ``[s0, s1]``. ``(ea, eb, t)`` is right-handed, so the
    patch normal points away from the axis.
    """

    radius: float
    phi: tuple
    s: tuple
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    ea: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    eb: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    tag: str = "cylinder"

    def _map(self, u, v):
        ph = 0.5 * (self.phi[0] + self.phi[1]) + 0.5 * (self.phi[1] - self.phi[0]) * u
        s = 0.5 * (self.s[0] + self.s[1]) + 0.5 * (self.s[1] - self.s[0]) * v
        dph = 0.5 * (self.phi[1] - self.phi[0])
        ds = 0.5 * (self.s[1] - self.s[0])
        o, t, ea, eb = (np.asarray(z, dtype=float) for z in (self.origin, self.t, self.ea, self.eb))
        c, sn = np.cos(ph)[..., None], np.sin(ph)[..., None]
        radial = c * ea + sn * eb
        x = o + s[..., None] * t + self.radius * radial
        xu = self.radius * dph * (-sn * ea + c * eb)
        xv = np.broadcast_to(ds * t, x.shape).copy()
        return x, xu, xv


@dataclass
class TorusPatch(Patch):
    """Patch of a bent tube.

    The centreline is the arc ``C(theta) = Rb (1 - cos theta) ex + Rb sin theta ez``
    for ``theta`` in ``[th0, th1]``; the cross-section point is
    ``C + a (cos phi N(theta) + sin phi ey)`` with
    ``N = cos theta ex - sin theta ez``.
    """

    radius: float
    bend_radius: float
    phi: tuple
    theta: tuple
    tag: str = "torus"

    def _map(self, u, v):
        ph = 0.5 * (self.phi[0] + self.phi[1]) + 0.5 * (self.phi[1] - self.phi[0]) * u
        th = 0.5 * (self.theta[0] + self.theta[1]) + 0.5 * (self.theta[1] - self.theta[0]) * v
        dph = 0.5 * (self.phi[1] - self.phi[0])
        dth = 0.5 * (self.theta[1] - self.theta[0])
        a, Rb = self.radius, self.bend_radius
        cp, sp, ct, st = np.cos(ph), np.sin(ph), np.cos(th), np.sin(th)
        x = _stack(Rb * (1 - ct) + a * cp * ct, a * sp, Rb * st - a * cp * st)
        xu = dph * _stack(-a * sp * ct, a * cp, a * sp * st)
        xv = dth * _stack(Rb * st - a * cp * st, 0.0 * ph, Rb * ct - a * cp * ct)
        return x, xu, xv


@dataclass
class DiscCorePatch(Patch):
    """Blend between the edge of a central square and a circular arc.

    Used for the ring of four patches between the central square of a
    planar disc mesh and its first circle. ``u`` runs along the arc and
    ``v`` from the square edge (``v = -1``) to the circle (``v = +1``).
    """

    half_side: float
    radius: float
    quadrant: int
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e1: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    e2: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    tag: str = "disc"

    def _map(self, u, v):
        # u runs clockwise so that x_u x x_v follows e1 x e2
        u = -u
        phc = 0.5 * np.pi * self.quadrant
        ph = phc + 0.25 * np.pi * u
        c0, s0 = np.cos(phc), np.sin(phc)
        # square edge point: outward normal (c0, s0), tangent (-s0, c0)
        hs = self.half_side
        sq = _stack(hs * c0 - hs * u * s0, hs * s0 + hs * u * c0)
        sq_u = np.broadcast_to(_stack(-hs * s0, hs * c0), sq.shape)
        ci = self.radius * _stack(np.cos(ph), np.sin(ph))
        ci_u = 0.25 * np.pi * self.radius * _stack(-np.sin(ph), np.cos(ph))
        t = 0.5 * (v + 1)
        p2 = (1 - t)[..., None] * sq + t[..., None] * ci
        p2u = -((1 - t)[..., None] * sq_u + t[..., None] * ci_u)
        p2v = 0.5 * (ci - sq)
        return _plane_embed(self.origin, self.e1, self.e2, p2, p2u, p2v)


@dataclass
class AnnulusPatch(Patch):
    """Annular sector ``r in [r0, r1]``, ``phi = phic - pi u / 4`` in a plane."""

    r: tuple
    quadrant: int
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e1: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    e2: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    tag: str = "disc"

    def _map(self, u, v):
        ph = 0.5 * np.pi * self.quadrant - 0.25 * np.pi * u
        rr = 0.5 * (self.r[0] + self.r[1]) + 0.5 * (self.r[1] - self.r[0]) * v
        c, s = np.cos(ph), np.sin(ph)
        p2 = _stack(rr * c, rr * s)
        p2u = -0.25 * np.pi * _stack(-rr * s, rr * c)
        p2v = 0.5 * (self.r[1] - self.r[0]) * _stack(c, s)
        return _plane_embed(self.origin, self.e1, self.e2, p2, p2u, p2v)


def _plane_embed(origin, e1, e2, p2, p2u, p2v):
    o, e1, e2 = (np.asarray(z, dtype=float) for z in (origin, e1, e2))
    x = o + p2[..., 0:1] * e1 + p2[..., 1:2] * e2
    xu = p2u[..., 0:1] * e1 + p2u[..., 1:2] * e2
    xv = p2v[..., 0:1] * e1 + p2v[..., 1:2] * e2
    return x, xu, xv


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------


@dataclass
class SurfaceMesh:
    """Nodes of a patch mesh sampled on open Chebyshev tensor grids.

    Node ``k`` of patch ``p`` with grid index ``(i, j)`` has global index
    ``p * n * n + i * n + j``.

    Attributes
    ----------
    patches : list of Patch
    n : int
        Points per direction on each patch.
    points, normals, xu, xv, e1, e2 : ndarray, shape (N, 3)
        Positions, unit normals, parametric tangents and the orthonormal
        tangent frame ``e1 = x_u/|x_u|``, ``e2 = n x e1``.
    jac, weights : ndarray, shape (N,)
        Surface Jacobian and smooth quadrature weights.
    window : ndarray, shape (N,)
        Surface window ``W_A`` (ones when no window is attached).
    siw : ndarray of int, shape (N,)
        SIW label per node (0 for none).
    """

    patches: list
    n: int
    siws: list = field(default_factory=list)
    window_params: WindowParams | None = None
    region: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 4:
            raise GeometryConfigurationError("patch degree must be at least 4")
        n = self.n
        x, w1 = quad.fejer_rule(n)
        U, V = np.meshgrid(x, x, indexing="ij")
        self.uv_grid = np.stack([U.ravel(), V.ravel()], axis=1)
        pts, xus, xvs = [], [], []
        for p in self.patches:
            X, Xu, Xv = p.eval(U, V)
            pts.append(X.reshape(-1, 3))
            xus.append(Xu.reshape(-1, 3))
            xvs.append(Xv.reshape(-1, 3))
        self.points = np.concatenate(pts)
        self.xu = np.concatenate(xus)
        self.xv = np.concatenate(xvs)
        cr = np.cross(self.xu, self.xv)
        self.jac = np.linalg.norm(cr, axis=1)
        if np.any(self.jac <= 0):
            raise GeometryConfigurationError("non-positive surface Jacobian")
        self.normals = cr / self.jac[:, None]
        self.e1 = self.xu / np.linalg.norm(self.xu, axis=1, keepdims=True)
        self.e2 = np.cross(self.normals, self.e1)
        w2 = np.outer(w1, w1).ravel()
        self.weights = self.jac * np.tile(w2, len(self.patches))
        self.patch_id = np.repeat(np.arange(len(self.patches)), n * n)
        self.uv = np.tile(self.uv_grid, (len(self.patches), 1))
        self.ij = np.tile(np.stack(np.meshgrid(np.arange(n), np.arange(n), indexing="ij"), -1).reshape(-1, 2),
                          (len(self.patches), 1))
        self.siw = siw_labels(self.points, self.siws) if self.siws else np.zeros(self.size, dtype=int)
        if self.window_params is not None and self.siws:
            self.window = eval_W(self.points, self.siws, self.window_params)
        else:
            self.window = np.ones(self.size)
        self._patch_info = None
        self.inside = None

    # basic sizes -----------------------------------------------------------
    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def npatch(self) -> int:
        return len(self.patches)

    def patch_slice(self, p: int) -> slice:
        nn = self.n * self.n
        return slice(p * nn, (p + 1) * nn)

    def patch_grid(self, arr, p: int):
        """View of per-node data of patch ``p`` reshaped to ``(n, n, ...)``."""
        a = arr[self.patch_slice(p)]
        return a.reshape((self.n, self.n) + a.shape[1:])

    def area(self) -> float:
        return float(self.weights.sum())

    def retained(self) -> np.ndarray:
        """Mask of nodes on the truncated boundary (``W_A > eta``)."""
        eta = self.window_params.eta if self.window_params is not None else 0.0
        return self.window > eta

    # per-patch geometric summaries ------------------------------------------
    def patch_info(self):
        """Centre, bounding radius and diameter of every patch."""
        if self._patch_info is None:
            g = np.linspace(-1, 1, 9)
            U, V = np.meshgrid(g, g, indexing="ij")
            centers, radii, diams = [], [], []
            for p in self.patches:
                X = p.point(U, V).reshape(-1, 3)
                c = p.point(np.array(0.0), np.array(0.0))
                centers.append(c)
                radii.append(np.max(np.linalg.norm(X - c, axis=1)) * 1.05)
                edge = np.concatenate([X[:9], X[-9:], X[::9], X[8::9]])
                dd = np.linalg.norm(edge[:, None, :] - edge[None, :, :], axis=-1)
                diams.append(dd.max())
            self._patch_info = (np.array(centers), np.array(radii), np.array(diams))
        return self._patch_info

    def node_patch_diameter(self) -> np.ndarray:
        return self.patch_info()[2][self.patch_id]

    # tangential density helpers -----------------------------------------------
    def to_frame(self, a) -> np.ndarray:
        """Cartesian tangential field ``(N, 3)`` to frame components ``(N, 2)``."""
        a = np.asarray(a)
        return np.stack([np.einsum("nk,nk->n", a, self.e1), np.einsum("nk,nk->n", a, self.e2)], axis=1)

    def from_frame(self, c) -> np.ndarray:
        """Frame components ``(N, 2)`` to Cartesian vectors ``(N, 3)``."""
        c = np.asarray(c)
        return c[:, 0:1] * self.e1 + c[:, 1:2] * self.e2

    def surface_div(self, a) -> np.ndarray:
        """Surface divergence of a tangential field given as ``(N, 3)`` Cartesian samples."""
        a = np.asarray(a)
        out = np.empty(self.size, dtype=np.result_type(a.dtype, float))
        for p in range(self.npatch):
            out[self.patch_slice(p)] = quad.surface_div(
                self.patch_grid(self.xu, p), self.patch_grid(self.xv, p), self.patch_grid(a, p)
            ).ravel()
        return out

    def surface_grad(self, f) -> np.ndarray:
        f = np.asarray(f)
        out = np.empty((self.size, 3), dtype=np.result_type(f.dtype, float))
        for p in range(self.npatch):
            out[self.patch_slice(p)] = quad.surface_grad(
                self.patch_grid(self.xu, p), self.patch_grid(self.xv, p), self.patch_grid(f, p)
            ).reshape(-1, 3)
        return out

    def closest_point(self, p: int, target, uv0=None, iters: int = 30):
        """Closest point of patch ``p`` to ``target`` by projected Gauss-Newton.

        Returns ``(uv, x, jac, dist)`` with ``jac`` the ``3 x 2`` parametric
        Jacobian at the closest point.
        """
        patch = self.patches[p]
        target = np.asarray(target, dtype=float)
        if uv0 is None:
            g = np.linspace(-1, 1, 7)
            U, V = np.meshgrid(g, g, indexing="ij")
            X = patch.point(U, V).reshape(-1, 3)
            k = int(np.argmin(np.linalg.norm(X - target, axis=1)))
            uv = np.array([U.ravel()[k], V.ravel()[k]])
        else:
            uv = np.array(uv0, dtype=float)
        for _ in range(iters):
            x, xu, xv = patch.eval(uv[0], uv[1])
            r = x - target
            g = np.array([xu @ r, xv @ r])
            H = np.array([[xu @ xu, xu @ xv], [xu @ xv, xv @ xv]])
            step = -np.linalg.solve(H, g)
            new = np.clip(uv + step, -1.0, 1.0)
            # keep a clamped coordinate fixed if the gradient pushes outward
            if np.max(np.abs(new - uv)) < 1e-14:
                uv = new
                break
            uv = new
        x, xu, xv = patch.eval(uv[0], uv[1])
        return uv, x, np.stack([xu, xv], axis=1), float(np.linalg.norm(x - target))

    # misc ---------------------------------------------------------------------
    def dump_csv(self, path) -> None:
        """Write one record per node: patch id, (u,v), position, normal, weight, W_A, SIW label."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["patch", "u", "v", "x", "y", "z", "nx", "ny", "nz", "weight", "W_A", "siw"])
            for k in range(self.size):
                wr.writerow(
                    [int(self.patch_id[k])]
                    + [f"{z:.15e}" for z in (*self.uv[k], *self.points[k], *self.normals[k], self.weights[k], self.window[k])]
                    + [int(self.siw[k])]
                )

    def edge_samples(self, p: int, m: int = 9):
        """Points on the four edges of patch ``p`` (order: u=-1, u=+1, v=-1, v=+1)."""
        g = np.linspace(-1, 1, m)
        one = np.ones(m)
        patch = self.patches[p]
        return [patch.point(-one, g), patch.point(one, g), patch.point(g, -one), patch.point(g, one)]


def watertight_audit(mesh: SurfaceMesh, m: int = 9, tol: float = 1e-12):
    """Check that every patch edge is matched by an edge of another patch.

    Returns ``(ok, open_edges, max_mismatch)``. Edges on the open ends of a
    truncated guide are reported in ``open_edges``; they are legitimate
    boundaries of the mesh.
    """
    edges = []
    for p in range(mesh.npatch):
        for e, pts in enumerate(mesh.edge_samples(p, m)):
            edges.append((p, e, pts))
    open_edges = []
    worst = 0.0
    for a, (p, e, pts) in enumerate(edges):
        best = np.inf
        for b, (q, f, qts) in enumerate(edges):
            if q == p:
                continue
            d1 = np.max(np.linalg.norm(pts - qts, axis=1))
            d2 = np.max(np.linalg.norm(pts - qts[::-1], axis=1))
            best = min(best, d1, d2)
        if best > tol:
            open_edges.append((p, e, best))
        else:
            worst = max(worst, best)
    return len(open_edges) == 0, open_edges, worst


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

_CUBE_FACES = (
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    ((0, 1, 0), (0, 0, 1), (1, 0, 0)),
    ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
)


def _ray_distance(pts, origin, direction, lo, hi):
    """Distance from points to the segment ``origin + s direction``, ``s`` in ``[lo, hi]``."""
    s = np.clip((pts - origin) @ direction, lo, hi)
    return np.linalg.norm(pts - origin - s[:, None] * direction, axis=1)


def _guide_inside(radius, z_min, z_max, open_min, open_max):
    def inside(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = -np.inf if open_min else z_min - radius
        hi = np.inf if open_max else z_max + radius
        d = _ray_distance(pts, np.zeros(3), np.array([0.0, 0.0, 1.0]), lo, hi)
        z = pts[:, 2]
        # beyond a capped end the tube becomes a hemisphere
        if not open_min:
            low = z < z_min
            d[low] = np.linalg.norm(pts[low] - np.array([0.0, 0.0, z_min]), axis=1)
        if not open_max:
            high = z > z_max
            d[high] = np.linalg.norm(pts[high] - np.array([0.0, 0.0, z_max]), axis=1)
        return d < radius
    return inside


def _bend_inside(radius, bend_radius):
    def inside(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ez, ex = np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])
        d1 = _ray_distance(pts, np.zeros(3), ez, -np.inf, 0.0)
        d2 = _ray_distance(pts, np.array([bend_radius, 0.0, bend_radius]), ex, 0.0, np.inf)
        c = np.array([bend_radius, 0.0, 0.0])
        q = pts - c
        th = np.arctan2(q[:, 2], -q[:, 0])
        th = np.clip(th, 0.0, 0.5 * np.pi)
        foot = c + bend_radius * np.stack([-np.cos(th), np.zeros_like(th), np.sin(th)], axis=1)
        d3 = np.linalg.norm(pts - foot, axis=1)
        return np.minimum(np.minimum(d1, d2), d3) < radius
    return inside


def _split(lo, hi, k):
    e = np.linspace(lo, hi, k + 1)
    return list(zip(e[:-1], e[1:]))


def build_sphere(radius: float, patches_per_face: int = 1, degree: int = 16, center=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Cube-to-sphere mesh with ``6 * patches_per_face**2`` patches.

    Parameters
    ----------
    radius : float
        Sphere radius, > 0.
    patches_per_face : int
        Each cube face is split into ``k x k`` sub-patches.
    degree : int
        Chebyshev points per patch direction (at least 4).
    """
    if not radius > 0:
        raise GeometryConfigurationError("sphere radius must be positive")
    if degree < 4:
        raise GeometryConfigurationError("patch degree must be at least 4")
    patches = []
    for d, t1, t2 in _CUBE_FACES:
        d, t1, t2 = (np.array(z, dtype=float) for z in (d, t1, t2))
        if np.dot(np.cross(t1, t2), d) < 0:
            t1, t2 = t2, t1
        for U in _split(-1, 1, patches_per_face):
            for V in _split(-1, 1, patches_per_face):
                patches.append(CubeSpherePatch(d, t1, t2, np.asarray(center, float), radius, U, V))
    mesh = SurfaceMesh(patches, degree)
    c0 = np.asarray(center, float)
    mesh.inside = lambda pts: np.linalg.norm(np.atleast_2d(pts) - c0, axis=1) < radius
    return mesh


def _cap_patches(radius, z_end, upward, phi_splits, azimuthal_sub):
    """Hemispherical cap (top cube face plus upper halves of the side faces)."""
    sgn = 1.0 if upward else -1.0
    center = np.array([0.0, 0.0, z_end])
    ez = np.array([0.0, 0.0, sgn])
    patches = []
    for q in range(4):
        phc = 0.5 * np.pi * q
        d = np.array([np.cos(phc), np.sin(phc), 0.0])
        t1 = np.array([-np.sin(phc), np.cos(phc), 0.0])
        t2 = ez
        if np.dot(np.cross(t1, t2), d) < 0:
            # lower cap: flip the tangent order and reverse the azimuth running direction
            for U in _split(-1, 1, azimuthal_sub):
                patches.append(CubeSpherePatch(d, ez, t1, center, radius, (0.0, 1.0), U))
        else:
            for U in _split(-1, 1, azimuthal_sub):
                patches.append(CubeSpherePatch(d, t1, t2, center, radius, U, (0.0, 1.0)))
    t1, t2 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    if np.dot(np.cross(t1, t2), ez) < 0:
        t1, t2 = t2, t1
    for U in _split(-1, 1, azimuthal_sub):
        for V in _split(-1, 1, azimuthal_sub):
            patches.append(CubeSpherePatch(ez, t1, t2, center, radius, U, V))
    return patches


def build_circular_guide(
    radius: float,
    z_min: float,
    z_max: float,
    siw_ends=("min", "max"),
    axial_patches: int = 4,
    azimuthal_patches: int = 4,
    degree: int = 12,
    window: WindowParams | None = None,
    siw_origins: dict | None = None,
) -> SurfaceMesh:
    """Straight circular guide along ``z``, open at SIW ends and capped elsewhere.

    Parameters
    ----------
    radius : float
        Core radius ``a``.
    z_min, z_max : float
        Axial extent of the lateral surface.
    siw_ends : subset of {"min", "max"}
        Ends continuing to infinity. Other ends get a hemispherical cap.
    axial_patches, azimuthal_patches : int
        Lateral patch counts. Capped guides need a multiple of 4 azimuthal
        patches so the cap seams match.
    degree : int
        Chebyshev points per patch direction.
    window : WindowParams, optional
        Window attached to the SIWs. SIW origins default to distance ``A``
        from the open ends, so the window vanishes exactly at the cuts.
    siw_origins : dict, optional
        Explicit axial origin for ``"min"``/``"max"`` SIWs.
    """
    if not radius > 0:
        raise GeometryConfigurationError("guide radius must be positive")
    if not z_max > z_min:
        raise GeometryConfigurationError("z_max must exceed z_min")
    ends = set(siw_ends)
    if not ends <= {"min", "max"}:
        raise GeometryConfigurationError(f"unknown SIW end(s) {ends - {'min', 'max'}}")
    capped = {"min", "max"} - ends
    if capped and azimuthal_patches % 4:
        raise GeometryConfigurationError("capped guides need a multiple of 4 azimuthal patches")
    siw_origins = dict(siw_origins or {})
    siws = []
    if window is not None and ends:
        A = window.A
        if len(ends) == 2 and z_max - z_min < 2 * A - 1e-12:
            raise GeometryConfigurationError(
                f"guide length {z_max - z_min:g} is shorter than twice the window size {A:g}"
            )
        if len(ends) == 1 and z_max - z_min < A - 1e-12:
            raise GeometryConfigurationError("window larger than guide")
        cs = {"kind": "circular", "radius": float(radius)}
        label = 1
        if "min" in ends:
            o = siw_origins.get("min", z_min + A)
            siws.append(SIWDescriptor((0.0, 0.0, o), (0.0, 0.0, -1.0), cs, label))
            label += 1
        if "max" in ends:
            o = siw_origins.get("max", z_max - A)
            siws.append(SIWDescriptor((0.0, 0.0, o), (0.0, 0.0, 1.0), cs, label))
    patches = []
    dphi = 2 * np.pi / azimuthal_patches
    # azimuthal patch q spans phi in [phic - pi/4 * k, ...] aligned with the cap faces
    phis = [(-0.25 * np.pi + q * dphi, -0.25 * np.pi + (q + 1) * dphi) for q in range(azimuthal_patches)]
    for s in _split(z_min, z_max, axial_patches):
        for ph in phis:
            patches.append(CylinderPatch(radius, ph, s))
    sub = azimuthal_patches // 4 if capped else 1
    if "max" in capped:
        patches.extend(_cap_patches(radius, z_max, True, None, sub))
    if "min" in capped:
        patches.extend(_cap_patches(radius, z_min, False, None, sub))
    mesh = SurfaceMesh(patches, degree, siws=siws, window_params=window)
    mesh.inside = _guide_inside(radius, z_min, z_max, "min" in ends, "max" in ends)
    return mesh


def build_capsule(radius: float, length: float, degree: int = 12, axial_patches: int = 2) -> SurfaceMesh:
    """Closed cylinder of the given lateral length with hemispherical caps."""
    return build_circular_guide(radius, -0.5 * length, 0.5 * length, siw_ends=(), axial_patches=axial_patches,
                                azimuthal_patches=4, degree=degree)


def build_bend(radius: float, bend_radius: float, straight: float, degree: int = 12,
               straight_patches: int = 2, bend_patches: int = 2, window: WindowParams | None = None) -> SurfaceMesh:
    """Quarter-torus bend joining two straight semi-infinite arms.

    Arm 1 lies on the ``z`` axis for ``z in [-straight, 0]``; the bend turns
    toward ``+x`` and arm 2 runs along ``x`` from ``x = bend_radius`` at
    height ``z = bend_radius``. Both arm ends are SIWs.
    """
    if not bend_radius > radius:
        raise GeometryConfigurationError("bend radius must exceed the tube radius")
    phis = [(-0.25 * np.pi + q * 0.5 * np.pi, 0.25 * np.pi + q * 0.5 * np.pi) for q in range(4)]
    patches = []
    for s in _split(-straight, 0.0, straight_patches):
        for ph in phis:
            patches.append(CylinderPatch(radius, ph, s))
    for th in _split(0.0, 0.5 * np.pi, bend_patches):
        for ph in phis:
            patches.append(TorusPatch(radius, bend_radius, ph, th))
    o2 = np.array([bend_radius, 0.0, bend_radius])
    for s in _split(0.0, straight, straight_patches):
        for ph in phis:
            patches.append(CylinderPatch(radius, ph, s, origin=o2, t=np.array([1.0, 0.0, 0.0]),
                                         ea=np.array([0.0, 0.0, -1.0]), eb=np.array([0.0, 1.0, 0.0])))
    siws = []
    if window is not None:
        if straight < window.A:
            raise GeometryConfigurationError("window larger than the straight arms")
        cs = {"kind": "circular", "radius": float(radius)}
        siws = [
            SIWDescriptor((0.0, 0.0, -straight + window.A), (0.0, 0.0, -1.0), cs, 1),
            SIWDescriptor(tuple(o2 + np.array([straight - window.A, 0, 0])), (1.0, 0.0, 0.0), cs, 2),
        ]
    mesh = SurfaceMesh(patches, degree, siws=siws, window_params=window)
    mesh.inside = _bend_inside(radius, bend_radius)
    return mesh


def disc_ring_radii(core_radius: float, R_max: float, first: float | None = None, growth: float = 1.5,
                    max_width: float = 0.5):
    """Ring boundaries ``a = r_0 < r_1 < ... `` of the annular part of a disc mesh.

    Widths grow geometrically by ``growth`` from ``first`` (default ``a/2``)
    but are capped at ``max_width`` until the radius passes ``8 a``, beyond
    which the mode is negligible and only geometric growth applies. The
    sequence does not depend on ``R_max``: enlarging ``R_max`` only appends
    rings. The last boundary is the first sequence value ``>= R_max``.
    """
    a = core_radius
    w = 0.5 * a if first is None else first
    r = [a]
    while r[-1] < R_max - 1e-12:
        width = w if r[-1] >= 8 * a else min(w, max_width)
        r.append(r[-1] + width)
        w *= growth
    return np.array(r)


def build_gamma_perp(siw: SIWDescriptor, cut_position: float, R_max: float, core_radius: float,
                     degree: int = 16, decay_rate: float | None = None, decay_tol: float = 1e-12,
                     ring_radii=None) -> SurfaceMesh:
    """Planar disc ``Gamma_perp`` cutting the incident SIW.

    Parameters
    ----------
    siw : SIWDescriptor
        Incident SIW; the disc is orthogonal to its axis.
    cut_position : float
        Axial coordinate ``c . (r - o)`` of the disc.
    R_max : float
        Requested outer radius (rounded up to the ring sequence).
    core_radius : float
        Radius of the core disc; nodes with ``rho < a`` form the interior part.
    decay_rate : float, optional
        Transverse decay constant ``w / a`` of the incident mode. When given,
        ``exp(-decay_rate (R_max - a)) < decay_tol`` is enforced.

    Returns
    -------
    SurfaceMesh
        Normals along ``+c``. ``mesh.region`` is ``"i"`` for core nodes and
        ``"e"`` for cladding nodes.
    """
    a = core_radius
    if not R_max > a:
        raise GeometryConfigurationError("R_max must exceed the core radius")
    if decay_rate is not None:
        factor = np.exp(-decay_rate * (R_max - a))
        if factor >= decay_tol:
            need = a + np.log(1 / decay_tol) / decay_rate
            raise GeometryConfigurationError(
                f"R_max = {R_max:g} gives transverse decay {factor:.2e}; use R_max >= {need:.4g}"
            )
    c = siw.c
    e1, e2 = siw.frame()
    # disc normal must be +c: e1 x e2 = -c for the mode frame, so swap
    f1, f2 = e2, e1
    if np.dot(np.cross(f1, f2), c) < 0:  # pragma: no cover - defensive
        f1, f2 = f2, f1
    origin = siw.o + cut_position * c
    hs = 0.5 * a
    patches = [PlanePatch(origin, hs * f1, hs * f2, tag="core")]
    for q in range(4):
        patches.append(DiscCorePatch(hs, a, q, origin, f1, f2, tag="core"))
    radii = disc_ring_radii(a, R_max) if ring_radii is None else np.asarray(ring_radii)
    for r0, r1 in zip(radii[:-1], radii[1:]):
        for q in range(4):
            patches.append(AnnulusPatch((r0, r1), q, origin, f1, f2, tag="clad"))
    mesh = SurfaceMesh(patches, degree)
    tags = np.array([p.tag for p in patches])
    mesh.region = np.where(tags[mesh.patch_id] == "core", "i", "e")
    mesh.R_max = float(radii[-1])
    mesh.core_radius = float(a)
    mesh.cut_position = float(cut_position)
    return mesh
