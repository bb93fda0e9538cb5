"""Run configuration: dataclasses and a validated INI loader.

Configuration files use ``key = value`` lines grouped in ``[section]``
blocks.  Every key must be known; values are parsed to the dataclass field
types.  All lengths are in vacuum wavelengths.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Raised for unreadable, malformed or infeasible configurations."""


@dataclass
class RunSection:
    kind: str = "solve-type2"


@dataclass
class MaterialsSection:
    n_core: float = 1.47
    n_clad: float = 1.0
    wavelength: float = 1.0


@dataclass
class GeometrySection:
    """Geometry block.

    ``shape`` is one of ``sphere``, ``guide`` (straight, both ends SIWs),
    ``terminated`` (incident SIW at the lower end, capped upper end) and
    ``bend``. Waveguide radii follow from ``V`` when ``radius`` is zero.
    Guide lengths ``extra_length`` and ``straight`` are in units of the
    window size ``A``.
    """

    shape: str = "guide"
    radius: float = 0.0
    V: float = 2.0
    extra_length: float = 0.0
    bend_radius: float = 1.5
    straight: float = 1.0


@dataclass
class WindowSection:
    """Window size ``A`` in units of ``A_unit`` (``lambda0`` or ``lambda_mode``)."""

    A: float = 3.0
    A_unit: str = "lambda_mode"
    alpha: float = 0.5


@dataclass
class DiscretizationSection:
    degree: int = 12
    patches_per_face: int = 1
    azimuthal_patches: int = 3
    axial_patch_length: float = 1.0
    perp_degree: int = 12
    R_max: float = 8.0
    dtype: str = "complex128"


@dataclass
class ExcitationSection:
    """Excitation block; ``kind`` is ``plane``, ``dipole``, ``beam`` or ``mode``."""

    kind: str = "mode"
    direction: tuple = (0.0, 0.0, 1.0)
    polarization: tuple = (1.0, 0.0, 0.0)
    location: tuple = (0.0, 0.0, 2.0)
    moment: tuple = (1.0, 0.0, 0.0)
    focus: tuple = (0.0, 0.0, 0.0)
    waist: float = 1.0
    mode_polarization: str = "even"
    amplitude: float = 1.0


@dataclass
class SolverSection:
    tol: float = 1e-8
    max_iter: int = 600
    restart: int = 200
    windowed: bool = True


@dataclass
class ToySection:
    k0: float = 6.283185307179586
    kz_over_k0: tuple = (0.1, 0.5, 0.9)
    A_min: float = 3.0
    A_max: float = 1e4
    A_count: int = 36
    alpha: float = 0.5


@dataclass
class ModesSection:
    m_az_max: int = 3


@dataclass
class FieldsSection:
    """Field export: a straight line from ``start`` to ``stop`` with ``points`` samples."""

    start: tuple = (0.0, 0.0, -1.0)
    stop: tuple = (0.0, 0.0, 1.0)
    points: int = 41
    clearance: float = 0.15


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    materials: MaterialsSection = field(default_factory=MaterialsSection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    window: WindowSection = field(default_factory=WindowSection)
    discretization: DiscretizationSection = field(default_factory=DiscretizationSection)
    excitation: ExcitationSection = field(default_factory=ExcitationSection)
    solver: SolverSection = field(default_factory=SolverSection)
    toy: ToySection = field(default_factory=ToySection)
    modes: ModesSection = field(default_factory=ModesSection)
    fields: FieldsSection = field(default_factory=FieldsSection)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_KINDS = {"toy", "modes", "mesh", "solve-type1", "solve-type2"}
_SHAPES = {"sphere", "guide", "terminated", "bend"}
_EXCITATIONS = {"plane", "dipole", "beam", "mode"}


def _parse(value: str, default, name: str):
    v = value.strip()
    try:
        if isinstance(default, bool):
            low = v.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(v)
        if isinstance(default, int):
            return int(v)
        if isinstance(default, float):
            return float(v)
        if isinstance(default, tuple):
            parts = [p for p in v.replace(",", " ").split() if p]
            return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name} = {value!r}") from exc
    return v


def validate(cfg: RunConfig) -> RunConfig:
    """Check ranges and cross-field consistency before any allocation."""
    if cfg.run.kind not in _KINDS:
        raise ConfigError(f"run.kind must be one of {sorted(_KINDS)}, got {cfg.run.kind!r}")
    m = cfg.materials
    if not (m.n_core > 0 and m.n_clad > 0):
        raise ConfigError("refractive indices must be positive")
    if m.wavelength != 1.0:
        raise ConfigError("lengths are in vacuum wavelengths; materials.wavelength must be 1")
    g = cfg.geometry
    if g.shape not in _SHAPES:
        raise ConfigError(f"geometry.shape must be one of {sorted(_SHAPES)}")
    if g.radius < 0 or (g.radius == 0 and g.V <= 0):
        raise ConfigError("geometry needs a positive radius or V")
    if g.shape != "sphere" and m.n_core <= m.n_clad:
        raise ConfigError("waveguides need n_core > n_clad")
    w = cfg.window
    if w.A_unit not in ("lambda0", "lambda_mode"):
        raise ConfigError("window.A_unit must be lambda0 or lambda_mode")
    if not (w.A > 0 and 0 < w.alpha < 1):
        raise ConfigError("window needs A > 0 and 0 < alpha < 1")
    d = cfg.discretization
    if d.degree < 4 or d.perp_degree < 4:
        raise ConfigError("patch degrees must be at least 4")
    if d.dtype not in ("complex128", "complex64"):
        raise ConfigError("discretization.dtype must be complex128 or complex64")
    if g.shape == "terminated" and d.azimuthal_patches % 4:
        raise ConfigError("terminated guides need a multiple of 4 azimuthal patches")
    e = cfg.excitation
    if e.kind not in _EXCITATIONS:
        raise ConfigError(f"excitation.kind must be one of {sorted(_EXCITATIONS)}")
    for name in ("direction", "polarization", "location", "moment", "focus"):
        if len(getattr(e, name)) != 3:
            raise ConfigError(f"excitation.{name} needs three components")
    if cfg.run.kind == "solve-type2" and (e.kind != "mode" or g.shape == "sphere"):
        raise ConfigError("solve-type2 needs a mode excitation on a waveguide")
    if cfg.run.kind == "solve-type1" and e.kind == "mode":
        raise ConfigError("solve-type1 needs a plane, dipole or beam excitation")
    s = cfg.solver
    if not (s.tol > 0 and s.max_iter > 0 and s.restart > 0):
        raise ConfigError("solver tol, max_iter and restart must be positive")
    t = cfg.toy
    if not (t.k0 > 0 and 1 < t.A_min < t.A_max and t.A_count >= 4):
        raise ConfigError("toy needs k0 > 0, 1 < A_min < A_max and at least 4 window sizes")
    if any(not 0 <= q < 1 for q in t.kz_over_k0):
        raise ConfigError("toy kz_over_k0 values must lie in [0, 1)")
    f = cfg.fields
    if len(f.start) != 3 or len(f.stop) != 3 or f.points < 1:
        raise ConfigError("fields needs 3-component start/stop and points >= 1")
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate an INI configuration.

    Raises
    ------
    ConfigError
        Unreadable file, unknown section or key, unparsable value or an
        infeasible combination.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from exc
    cfg = RunConfig()
    for section in parser.sections():
        if not hasattr(cfg, section):
            raise ConfigError(f"unknown section [{section}]")
        block = getattr(cfg, section)
        known = {f.name: f for f in dataclasses.fields(block)}
        for key, value in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {section}.{key}")
            setattr(block, key, _parse(value, getattr(block, key), f"{section}.{key}"))
    return validate(cfg)
