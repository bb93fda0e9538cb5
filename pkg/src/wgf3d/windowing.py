"""Slow-rise window functions used to truncate semi-infinite waveguide surfaces.

The 1D window ``w_A`` equals one on ``|d| <= alpha*A``, vanishes for ``|d| >= A``
and rises smoothly (all derivatives vanish at both ends of the rise) in
between.  The surface window ``W_A`` applies ``w_A`` to the axial coordinate of
points that lie inside a semi-infinite waveguide (SIW) region and is one
elsewhere on the surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class WindowDomainError(ValueError):
    """Raised for non-finite arguments or invalid window parameters."""


class SIWConfigurationError(ValueError):
    """Raised when SIW descriptors overlap or are malformed."""


@dataclass(frozen=True)
class WindowParams:
    """Parameters of the slow-rise window.

    Parameters
    ----------
    A : float
        Window size in length units. The window vanishes for ``|d| >= A``.
    alpha : float
        Rise fraction. The window is identically one for ``|d| <= alpha*A``.
    eta : float
        Support tolerance. Surface points with ``W_A <= eta`` are dropped from
        the truncated boundary.
    """

    A: float
    alpha: float = 0.5
    eta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.A) and self.A > 0):
            raise WindowDomainError(f"window size A must be positive, got {self.A!r}")
        if not (0.0 < self.alpha < 1.0):
            raise WindowDomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not (np.isfinite(self.eta) and self.eta >= 0):
            raise WindowDomainError(f"eta must be non-negative, got {self.eta!r}")

    def s(self, d):
        """Normalized rise coordinate ``(|d| - alpha*A) / (A - alpha*A)``."""
        d = np.asarray(d, dtype=float)
        return (np.abs(d) - self.alpha * self.A) / (self.A - self.alpha * self.A)


@dataclass(frozen=True)
class SIWDescriptor:
    """A semi-infinite waveguide section of the boundary.

    Parameters
    ----------
    origin : array_like, shape (3,)
        Point ``o_q`` on the axis where the window starts to count.
    axis : array_like, shape (3,)
        Unit vector ``c_q`` pointing toward the infinite end of the guide.
    cross_section : dict
        ``{"kind": "circular", "radius": a}`` or
        ``{"kind": "rectangular", "width": w, "height": h}``.
    label : int
        SIW index ``q`` (1-based).
    capture : float
        Transverse extent of the SIW region in units of the cross-section
        size. Surface points farther from the axis are not in the SIW.
    """

    origin: tuple
    axis: tuple
    cross_section: dict = field(default_factory=lambda: {"kind": "circular", "radius": 1.0})
    label: int = 1
    capture: float = 1.5

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float)
        c = np.asarray(self.axis, dtype=float)
        if o.shape != (3,) or c.shape != (3,):
            raise SIWConfigurationError("origin and axis must be 3-vectors")
        if abs(np.linalg.norm(c) - 1.0) > 1e-14:
            raise SIWConfigurationError(f"axis must be a unit vector, |axis| = {np.linalg.norm(c)!r}")
        kind = self.cross_section.get("kind")
        if kind == "circular":
            keys = ("radius",)
        elif kind == "rectangular":
            keys = ("width", "height")
        else:
            raise SIWConfigurationError(f"unknown cross-section kind {kind!r}")
        for key in keys:
            if not self.cross_section.get(key, 0) > 0:
                raise SIWConfigurationError(f"cross-section parameter {key!r} must be > 0")
        object.__setattr__(self, "origin", tuple(o))
        object.__setattr__(self, "axis", tuple(c))

    @property
    def o(self) -> np.ndarray:
        return np.asarray(self.origin)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.axis)

    def frame(self):
        """Orthonormal transverse basis ``(e1, e2)`` with ``e1 x e2 = -c``.

        The mode launched from this SIW travels along ``-c``, so ``(e1, e2, -c)``
        is a right-handed frame for the incident field.
        """
        p = -self.c
        trial = np.array([1.0, 0.0, 0.0]) if abs(p[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = trial - p * (trial @ p)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(p, e1)
        return e1, e2

    def axial(self, r) -> np.ndarray:
        """Signed axial coordinate ``c_q . (r - o_q)``."""
        r = np.asarray(r, dtype=float)
        return (r - self.o) @ self.c

    def transverse(self, r) -> np.ndarray:
        """Distance of ``r`` from the SIW axis."""
        r = np.asarray(r, dtype=float)
        rel = r - self.o
        perp = rel - np.multiply.outer(rel @ self.c, self.c)
        return np.linalg.norm(perp, axis=-1)

    def size(self) -> float:
        cs = self.cross_section
        if cs["kind"] == "circular":
            return float(cs["radius"])
        return 0.5 * float(np.hypot(cs["width"], cs["height"]))

    def contains(self, r) -> np.ndarray:
        """Membership of surface points in the SIW region."""
        return (self.axial(r) >= 0.0) & (self.transverse(r) <= self.capture * self.size())


def eval_w(d, p: WindowParams):
    """Evaluate the 1D window ``w_A(d)``.

    Parameters
    ----------
    d : float or array_like
        Signed distance. Only ``|d|`` matters.
    p : WindowParams

    Returns
    -------
    float or ndarray
        Window values in ``[0, 1]``.
    """
    d_arr = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(d_arr)):
        raise WindowDomainError("window argument must be finite")
    s = p.s(d_arr)
    out = np.zeros_like(s)
    out[s < 0] = 1.0
    rise = (s >= 0) & (s < 1)
    sr = s[rise]
    with np.errstate(over="ignore", divide="ignore", under="ignore"):
        out[rise] = np.exp(-2.0 * np.exp(-1.0 / sr**2) / (1.0 - sr) ** 2)
    if np.ndim(d) == 0:
        return float(out)
    return out


def _check_disjoint(hits: np.ndarray) -> None:
    if np.any(hits.sum(axis=0) > 1):
        raise SIWConfigurationError("a surface point is claimed by more than one SIW")


def siw_labels(r, siws) -> np.ndarray:
    """SIW label of each point (0 when the point is in no SIW)."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    labels = np.zeros(r.shape[0], dtype=int)
    if not siws:
        return labels
    hits = np.array([s.contains(r) for s in siws])
    _check_disjoint(hits)
    for s, h in zip(siws, hits):
        labels[h] = s.label
    return labels


def eval_W(r, siws, p: WindowParams):
    """Evaluate the surface window ``W_A`` at surface points.

    Parameters
    ----------
    r : array_like, shape (3,) or (N, 3)
        Points on the surface.
    siws : sequence of SIWDescriptor
        Disjoint SIW regions.
    p : WindowParams

    Returns
    -------
    float or ndarray
    """
    r_arr = np.asarray(r, dtype=float)
    pts = np.atleast_2d(r_arr)
    out = np.ones(pts.shape[0])
    if siws:
        hits = np.array([s.contains(pts) for s in siws])
        _check_disjoint(hits)
        for s, h in zip(siws, hits):
            if np.any(h):
                out[h] = eval_w(s.axial(pts[h]), p)
    if r_arr.ndim == 1:
        return float(out[0])
    return out


def incident_extent(r, siw: SIWDescriptor, p: WindowParams):
    """Smooth cutoff ``chi`` limiting where incident-mode traces are imposed.

    ``chi`` is one inside the incident SIW and decays as ``w_A`` of the axial
    coordinate on the other side of the SIW origin, so it vanishes at axial
    distance ``A`` past the origin. Points off the SIW tube get zero.
    """
    pts = np.atleast_2d(np.asarray(r, dtype=float))
    d = siw.axial(pts)
    chi = np.where(d >= 0.0, 1.0, eval_w(d, p))
    chi = np.where(siw.transverse(pts) <= siw.capture * siw.size(), chi, 0.0)
    if np.asarray(r).ndim == 1:
        return float(chi[0])
    return chi
