"""Padded Cartesian grids, flattened field storage and scenario initial conditions.

Every field lives in a 1D array of length ``(n_x + 2) * (n_y + 2)``; cell
``(i, j)`` of the padded grid sits at ``k = j * (n_x + 2) + i``.  Interior
cells are ``1 <= i <= n_x`` and ``1 <= j <= n_y``; the ring around them is the
one-cell halo.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

G_DEFAULT = 9.81
DX_DEFAULT = 0.5
CFL_DEFAULT = 0.45
# depth below which a cell counts as dry
H_EPS = 1e-12

SCENARIO_KINDS = ("circular-dam-break", "lake-at-rest", "dambreak-1d", "from-file")
FIELD_NAMES = ("h", "hu", "hv", "z")


@dataclass(frozen=True)
class GridSpec:
    n_x: int
    n_y: int
    dx: float = DX_DEFAULT
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError(f"grid needs at least one cell per axis, got {self.n_x}x{self.n_y}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")

    @classmethod
    def square(cls, n_side: int, dx: float = DX_DEFAULT) -> "GridSpec":
        """Square grid of side ``n_side * dx`` centred on the origin."""
        half = 0.5 * n_side * dx
        return cls(n_side, n_side, dx, (-half, -half))

    @property
    def stride(self) -> int:
        return self.n_x + 2

    @property
    def n_arr(self) -> int:
        return (self.n_x + 2) * (self.n_y + 2)

    @property
    def padded_shape(self) -> tuple[int, int]:
        """Shape of the 2D ``(row j, column i)`` view of a field."""
        return (self.n_y + 2, self.n_x + 2)

    @property
    def n_cells(self) -> int:
        return self.n_x * self.n_y

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates over the padded grid as 2D arrays ``(x, y)``."""
        x0, y0 = self.origin
        x = x0 + (np.arange(self.n_x + 2) - 0.5) * self.dx
        y = y0 + (np.arange(self.n_y + 2) - 0.5) * self.dx
        return np.meshgrid(x, y)


def flat_index(i: int, j: int, spec: GridSpec) -> int:
    """Offset of padded cell ``(i, j)`` in a flattened field."""
    if __debug__:
        if not (0 <= i < spec.n_x + 2 and 0 <= j < spec.n_y + 2):
            raise IndexError(f"cell ({i}, {j}) outside padded grid {spec.n_x + 2}x{spec.n_y + 2}")
    return j * (spec.n_x + 2) + i


@dataclass
class FieldSet:
    """Conserved variables and bed elevation on one padded grid."""

    spec: GridSpec
    h: np.ndarray
    hu: np.ndarray
    hv: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in FIELD_NAMES:
            arr = getattr(self, name)
            if arr.shape != (self.spec.n_arr,):
                raise ValueError(f"field {name} has shape {arr.shape}, expected ({self.spec.n_arr},)")

    @classmethod
    def zeros(cls, spec: GridSpec) -> "FieldSet":
        return cls(spec, *(np.zeros(spec.n_arr) for _ in FIELD_NAMES))

    def copy(self) -> "FieldSet":
        return FieldSet(self.spec, self.h.copy(), self.hu.copy(), self.hv.copy(), self.z.copy())

    def grid(self, name: str) -> np.ndarray:
        """2D ``(j, i)`` view onto a padded field; writes go through."""
        return getattr(self, name).reshape(self.spec.padded_shape)

    def interior(self, name: str) -> np.ndarray:
        return self.grid(name)[1:-1, 1:-1]

    def volume(self) -> float:
        return float(self.interior("h").sum()) * self.spec.dx**2

    def surface(self) -> np.ndarray:
        """Free-surface elevation ``h + z`` over the interior."""
        return self.interior("h") + self.interior("z")


@dataclass
class ScenarioConfig:
    kind: str = "circular-dam-break"
    n_side: int = 200
    cfl: float = CFL_DEFAULT
    t_end: float = 1.0
    g: float = G_DEFAULT
    rain_rate: float = 0.0
    manning_n: float = 0.0
    dx: float = DX_DEFAULT
    max_steps: int | None = None
    t_io: float | None = None
    bump_height: float = 0.5
    h_left: float = 4.0
    h_right: float = 1.0
    source: str | None = None
    entropy_fix: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; expected one of {SCENARIO_KINDS}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.rain_rate < 0:
            raise ValueError(f"rain_rate must be non-negative, got {self.rain_rate}")
        if self.manning_n < 0:
            raise ValueError(f"manning_n must be non-negative, got {self.manning_n}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if self.n_side < 1:
            raise ValueError(f"n_side must be positive, got {self.n_side}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError(f"max_steps must be positive, got {self.max_steps}")
        if self.kind == "from-file" and not self.source:
            raise ValueError("from-file scenario needs a source snapshot path")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _coerce(key: str, raw: str):
    kind = _CONFIG_TYPES[key]
    if raw.lower() in ("none", ""):
        return None
    if kind == "int" or kind.startswith("int"):
        return int(raw)
    if kind == "float" or kind.startswith("float"):
        return float(raw)
    if kind == "bool":
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def parse_config(text: str) -> ScenarioConfig:
    """Parse ``key = value`` lines, optionally grouped under ``[section]`` headers.

    Section names only group keys for readability; every known key maps onto a
    :class:`ScenarioConfig` field and unknown keys land in ``extra``.
    """
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[scenario]\n" + text
    parser.read_string(text)
    values, extra = {}, {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.strip().replace("-", "_")
            raw = raw.strip()
            if key in _CONFIG_TYPES and key != "extra":
                values[key] = _coerce(key, raw)
            else:
                extra[f"{section}.{key}"] = raw
    return ScenarioConfig(**values, extra=extra)


def read_config(path: str | Path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def init_circular_dam_break(spec: GridSpec, cfg: ScenarioConfig | None = None) -> FieldSet:
    """Depth 4 inside a centred circle of radius ``n_side * dx / 5``, 1 outside, at rest."""
    if spec.n_x != spec.n_y:
        raise ValueError(f"circular dam break needs a square domain, got {spec.n_x}x{spec.n_y}")
    fields = FieldSet.zeros(spec)
    x, y = spec.cell_centers()
    radius = spec.n_x * spec.dx / 5.0
    inside = np.sqrt(x * x + y * y) <= radius
    h = fields.grid("h")
    h[1:-1, 1:-1] = np.where(inside[1:-1, 1:-1], 4.0, 1.0)
    return fields


def gaussian_bump(spec: GridSpec, height: float) -> np.ndarray:
    """Centred Gaussian bed over the padded grid (2D)."""
    x, y = spec.cell_centers()
    x0, y0 = spec.origin
    cx = x0 + 0.5 * spec.n_x * spec.dx
    cy = y0 + 0.5 * spec.n_y * spec.dx
    width = max(spec.n_x, spec.n_y) * spec.dx / 8.0
    return height * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * width**2))


def init_lake_at_rest(spec: GridSpec, bump_height: float, level: float = 1.0) -> FieldSet:
    """Still water at surface ``level`` over a Gaussian bump; the crest dries out if it pokes through."""
    if bump_height < 0:
        raise ValueError(f"bump_height must be non-negative, got {bump_height}")
    fields = FieldSet.zeros(spec)
    z = gaussian_bump(spec, bump_height)
    fields.grid("z")[1:-1, 1:-1] = z[1:-1, 1:-1]
    fields.grid("h")[1:-1, 1:-1] = np.maximum(0.0, level - z[1:-1, 1:-1])
    return fields


def init_dambreak_1d(spec: GridSpec, h_left: float = 4.0, h_right: float = 1.0,
                     x_dam: float | None = None) -> FieldSet:
    """Planar dam along x: ``h_left`` for cell centres left of ``x_dam``, ``h_right`` otherwise."""
    fields = FieldSet.zeros(spec)
    x, _ = spec.cell_centers()
    if x_dam is None:
        x_dam = spec.origin[0] + 0.5 * spec.n_x * spec.dx
    fields.grid("h")[1:-1, 1:-1] = np.where(x[1:-1, 1:-1] < x_dam, h_left, h_right)
    return fields


def make_scenario(cfg: ScenarioConfig) -> FieldSet:
    """Build the global initial state for ``cfg`` (halos left for the caller to fill)."""
    if cfg.kind == "circular-dam-break":
        return init_circular_dam_break(GridSpec.square(cfg.n_side, cfg.dx), cfg)
    if cfg.kind == "lake-at-rest":
        return init_lake_at_rest(GridSpec.square(cfg.n_side, cfg.dx), cfg.bump_height)
    if cfg.kind == "dambreak-1d":
        spec = GridSpec(cfg.n_side, 1, cfg.dx, (0.0, 0.0))
        return init_dambreak_1d(spec, cfg.h_left, cfg.h_right)
    from .io import read_snapshot

    fields, _ = read_snapshot(cfg.source)
    return fields
