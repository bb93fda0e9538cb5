"""Brute-force integration over a long piece of the semi-infinite tail.

Validation oracle for the disc replacement of the tail integrals: the mode
traces are integrated over a long cylinder beyond the cut with a smooth
window toward its far end, and the resulting potentials are compared with
minus the disc potentials.
"""

from __future__ import annotations

import numpy as np

from .excitation import BoundMode
from .geometry import CylinderPatch, SurfaceMesh
from .operators import MaterialPair, PotentialEvaluator
from .windowing import WindowParams, eval_w


def build_tail(exc: BoundMode, cut_position: float, length: float, patch_length: float = 1.0,
               azimuthal_patches: int = 3, degree: int = 12) -> SurfaceMesh:
    """Lateral cylinder of the incident SIW from the cut to ``length`` beyond it."""
    siw = exc.siw
    a = float(siw.cross_section["radius"])
    e1, e2 = siw.frame()
    c = siw.c
    nax = max(1, int(np.ceil(length / patch_length)))
    edges = cut_position + np.linspace(0.0, length, nax + 1)
    dphi = 2 * np.pi / azimuthal_patches
    patches = []
    for s0, s1 in zip(edges[:-1], edges[1:]):
        for q in range(azimuthal_patches):
            patches.append(CylinderPatch(a, (q * dphi, (q + 1) * dphi), (s0, s1), origin=siw.o, t=c, ea=e2, eb=e1))
    return SurfaceMesh(patches, degree)


def tail_potentials(exc: BoundMode, materials: MaterialPair, points, cut_position: float, length: float = 30.0,
                    patch_length: float = 1.0, azimuthal_patches: int = 3, degree: int = 12, params=None) -> dict:
    """Tail potentials of the mode traces at ``points``.

    Returns a dict mapping ``"i"`` and ``"e"`` to ``(E, H)`` where ``E`` is
    ``A_l[m_l] + (i / (omega eps_l)) B_l[j_l]`` over the tail with the side's
    density (``m_i = -n x E_mode`` and ``m_e = -m_i``), tapered by a window
    that is one on the first half of the tail and vanishes at its far end.
    """
    tail = build_tail(exc, cut_position, length, patch_length, azimuthal_patches, degree)
    E, H = exc.fields(tail.points)
    n = tail.normals
    taper = eval_w(exc.siw.axial(tail.points) - cut_position, WindowParams(length))
    m = -np.cross(n, E) * taper[:, None]
    j = -np.cross(n, H) * taper[:, None]
    out = {}
    for lbl, mat, sgn in (("i", materials.interior, 1.0), ("e", materials.exterior, -1.0)):
        ev = PotentialEvaluator(tail, mat.k, points, params)
        out[lbl] = ev.field(sgn * m, sgn * j, mat)
    out["mesh"] = tail
    return out
