"""Dense Nyström matrices with singular and near-singular corrections.

:func:`assemble` builds ``M[k, t, j]`` such that ``M[k] @ f`` approximates
``int K_k(t, y) f(y) dsigma(y)`` for nodal data ``f`` on a mesh.  Far
source patches use the smooth Fejér weights.  For source patches within the
near-field threshold of a target the row block is replaced by weights from a
dedicated rule whose points are mapped back to the nodes through Chebyshev
interpolation:

* self patch (target is a node of the patch): polar rule about the node;
* close patches (distance below ``polar_factor`` source diameters): graded
  polar rule about the closest point;
* remaining near patches: upsampled tensor Fejér rule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import quadrature as quad

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NearParams:
    """Near-field quadrature controls.

    Parameters
    ----------
    near_factor : float
        Threshold, in source-patch diameters, below which the smooth rule is
        replaced.
    polar_factor : float
        Below this distance (in diameters) the graded polar rule is used,
        above it the upsampled tensor rule.
    upsample : int
        Points per direction of the upsampled tensor rule, as a multiple of
        the patch degree.
    n_rad, n_ang : int
        Base orders of the polar rules.
    chunk_bytes : int
        Working-memory budget of the smooth pass.
    """

    near_factor: float = 1.0
    polar_factor: float = 0.35
    upsample: int = 3
    n_rad: int = 12
    n_ang: int = 16
    chunk_bytes: int = 256 * 2**20


@dataclass
class Targets:
    """Evaluation points with optional surface membership.

    Parameters
    ----------
    x : ndarray, shape (T, 3)
    n, e1, e2 : ndarray, shape (T, 3), optional
        Normal and tangent frame, required by on-surface kernels.
    patch : ndarray of int, shape (T,), optional
        Patch index of on-surface targets in the source mesh (-1 if none).
    ij : ndarray of int, shape (T, 2), optional
        Grid index of on-surface targets.
    """

    x: np.ndarray
    n: np.ndarray | None = None
    e1: np.ndarray | None = None
    e2: np.ndarray | None = None
    patch: np.ndarray | None = None
    ij: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if self.patch is None:
            self.patch = -np.ones(self.x.shape[0], dtype=int)

    @classmethod
    def from_mesh(cls, mesh) -> "Targets":
        return cls(mesh.points, mesh.normals, mesh.e1, mesh.e2, mesh.patch_id.copy(), mesh.ij.copy())

    @classmethod
    def on_surface_foreign(cls, mesh) -> "Targets":
        """Nodes of ``mesh`` used as targets for a different source mesh."""
        return cls(mesh.points, mesh.normals, mesh.e1, mesh.e2)

    def __len__(self):
        return self.x.shape[0]

    def take(self, idx):
        pick = lambda a: None if a is None else a[idx]
        return {k: pick(getattr(self, k)) for k in ("x", "n", "e1", "e2")}


def _geom_dict(x, xu, xv):
    cr = np.cross(xu, xv)
    J = np.linalg.norm(cr, axis=-1)
    n = cr / J[..., None]
    e1 = xu / np.linalg.norm(xu, axis=-1, keepdims=True)
    e2 = np.cross(n, e1)
    return {"x": x, "n": n, "e1": e1, "e2": e2}, J


class _UpsampleCache:
    def __init__(self, mesh, m):
        self.mesh = mesh
        self.m = m
        x, w, P = quad.tensor_upsample(mesh.n, m)
        self.P = P
        U, V = np.meshgrid(x, x, indexing="ij")
        self.U, self.V = U.ravel(), V.ravel()
        self.w2 = np.outer(w, w).ravel()
        self.cache = {}

    def get(self, p):
        if p not in self.cache:
            X, Xu, Xv = self.mesh.patches[p].eval(self.U, self.V)
            g, J = _geom_dict(X, Xu, Xv)
            self.cache[p] = (g, J * self.w2)
        return self.cache[p]


def _project_many(mesh, p, pts, iters=40):
    """Vectorized projected Gauss-Newton closest points on patch ``p``."""
    patch = mesh.patches[p]
    g = np.linspace(-1, 1, 9)
    U, V = np.meshgrid(g, g, indexing="ij")
    X = patch.point(U, V).reshape(-1, 3)
    d2 = np.einsum("tsk,tsk->ts", pts[:, None, :] - X[None], pts[:, None, :] - X[None])
    k = np.argmin(d2, axis=1)
    uv = np.stack([U.ravel()[k], V.ravel()[k]], axis=1)
    for _ in range(iters):
        x, xu, xv = patch.eval(uv[:, 0], uv[:, 1])
        r = x - pts
        gu = np.einsum("tk,tk->t", xu, r)
        gv = np.einsum("tk,tk->t", xv, r)
        a = np.einsum("tk,tk->t", xu, xu)
        b = np.einsum("tk,tk->t", xu, xv)
        c = np.einsum("tk,tk->t", xv, xv)
        det = a * c - b * b
        du = -(c * gu - b * gv) / det
        dv = -(-b * gu + a * gv) / det
        new = np.clip(uv + np.stack([du, dv], axis=1), -1.0, 1.0)
        moved = np.max(np.abs(new - uv))
        uv = new
        if moved < 1e-15:
            break
    x, xu, xv = patch.eval(uv[:, 0], uv[:, 1])
    dist = np.linalg.norm(x - pts, axis=1)
    jac = np.stack([xu, xv], axis=2)
    return uv, dist, jac


def _src_nodes(mesh, sl=slice(None)):
    return {"x": mesh.points[sl], "n": mesh.normals[sl], "e1": mesh.e1[sl], "e2": mesh.e2[sl]}


def smooth_pass(mesh, targets: Targets, kernel, out, params: NearParams):
    """Fill ``out`` with smooth-rule weights ``K(t, y_j) w_j``."""
    N = mesh.size
    T = len(targets)
    per_row = N * (kernel.K + 12) * 16
    chunk = max(1, int(params.chunk_bytes // per_row))
    src = _src_nodes(mesh)
    w = mesh.weights
    for s in range(0, T, chunk):
        idx = slice(s, min(T, s + chunk))
        vals = kernel(targets.take(idx), src)
        np.multiply(vals, w[None, None, :], out=out[:, idx, :])


def near_pass(mesh, targets: Targets, kernel, out, params: NearParams, stats=None):
    """Overwrite near-field row blocks of ``out`` with corrected weights."""
    n = mesh.n
    nn = n * n
    centers, radii, diams = mesh.patch_info()
    up = _UpsampleCache(mesh, params.upsample * n)
    counts = {"self": 0, "polar": 0, "upsampled": 0}
    for p in range(mesh.npatch):
        sl = mesh.patch_slice(p)
        lim = params.near_factor * diams[p]
        lower = np.linalg.norm(targets.x - centers[p], axis=1) - radii[p]
        own = targets.patch == p
        cand = np.nonzero((lower <= lim) & ~own)[0]
        # self targets
        for t in np.nonzero(own)[0]:
            i, j = targets.ij[t]
            u, v, wq, Z = quad.self_rule(n, int(i), int(j), params.n_rad, params.n_ang)
            X, Xu, Xv = mesh.patches[p].eval(u, v)
            g, J = _geom_dict(X, Xu, Xv)
            kv = kernel(targets.take([t]), g)[:, 0, :]
            out[:, t, sl] = quad.contract(kv, wq * J, Z)
            counts["self"] += 1
        if cand.size == 0:
            continue
        uv, dist, jac = _project_many(mesh, p, targets.x[cand])
        for c_idx, t in enumerate(cand):
            delta = dist[c_idx]
            if delta > lim:
                continue
            if delta <= params.polar_factor * diams[p]:
                u, v, wq = quad.polar_rule(uv[c_idx, 0], uv[c_idx, 1], params.n_rad, params.n_ang,
                                           jac=jac[c_idx], delta=delta)
                X, Xu, Xv = mesh.patches[p].eval(u, v)
                g, J = _geom_dict(X, Xu, Xv)
                kv = kernel(targets.take([t]), g)[:, 0, :]
                Z = quad.khatri_rao(quad.interp_matrix(n, u), quad.interp_matrix(n, v))
                out[:, t, sl] = quad.contract(kv, wq * J, Z)
                counts["polar"] += 1
            else:
                g, wJ = up.get(p)
                kv = kernel(targets.take([t]), g)[:, 0, :] * wJ[None, :]
                m = up.m
                C = kv.reshape(-1, m, m)
                P = up.P
                res = np.matmul(np.matmul(P.T, C), P)
                out[:, t, sl] = res.reshape(-1, nn)
                counts["upsampled"] += 1
    if stats is not None:
        stats.update(counts)
    return counts


def assemble(mesh, targets: Targets, kernel, params: NearParams | None = None, stats=None,
             dtype=complex) -> np.ndarray:
    """Corrected Nyström matrices of a kernel family.

    Parameters
    ----------
    mesh : SurfaceMesh
        Source mesh.
    targets : Targets
    kernel : callable
        Kernel family with attribute ``K``.
    params : NearParams, optional
    stats : dict, optional
        Receives the number of self, polar and upsampled corrections.
    dtype : numpy dtype
        Storage type of the result; ``complex64`` halves the memory of large
        tables at single-precision accuracy.

    Returns
    -------
    ndarray, shape (K, T, N)
    """
    params = params or NearParams()
    out = np.empty((kernel.K, len(targets), mesh.size), dtype=dtype)
    smooth_pass(mesh, targets, kernel, out, params)
    counts = near_pass(mesh, targets, kernel, out, params, stats)
    log.debug("assembled %s: %s", type(kernel).__name__, counts)
    return out


def surface_distance(mesh, points):
    """Distance from each point to the mesh surface and the diameter of the closest patch.

    Only patches whose bounding sphere could hold the closest point are
    projected onto, so the cost is modest for points near a few patches.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    centers, radii, diams = mesh.patch_info()
    lower = np.linalg.norm(pts[:, None, :] - centers[None], axis=-1) - radii[None]
    upper = np.linalg.norm(pts[:, None, :] - centers[None], axis=-1) + radii[None]
    bound = upper.min(axis=1)
    best = np.full(pts.shape[0], np.inf)
    best_diam = np.zeros(pts.shape[0])
    for p in range(mesh.npatch):
        cand = np.nonzero(lower[:, p] <= bound)[0]
        if cand.size == 0:
            continue
        _, dist, _ = _project_many(mesh, p, pts[cand])
        better = dist < best[cand]
        best[cand[better]] = dist[better]
        best_diam[cand[better]] = diams[p]
    return best, best_diam
