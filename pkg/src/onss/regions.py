"""Five-region classification of the needle workspace.

Critical (CR) and target (TR) regions are stored as closed discs. Detection
regions (DR) are derived as annuli of width ``dr_width`` around every CR, safe
regions (SR) are grid cells discovered to be safe, and everything else is
unknown (UR).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError

Point = tuple[float, float]
Cell = tuple[int, int]

# min_clearance result when the map holds no CR
CLEARANCE_SENTINEL = 1e9


class RegionType(Enum):
    UR = "UR"
    SR = "SR"
    CR = "CR"
    DR = "DR"
    TR = "TR"


@dataclass(frozen=True)
class Region:
    center: Point
    radius: float
    kind: RegionType = RegionType.CR

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"region radius must be positive, got {self.radius}")
        if self.kind not in (RegionType.CR, RegionType.TR):
            raise ValueError(f"only CR and TR regions are stored, got {self.kind}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def distance(self, p: Point) -> float:
        """Signed distance from ``p`` to the disc boundary (negative inside)."""
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1]) - self.radius


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` in mm."""

    x0: float = 0.0
    y0: float = 0.0
    x1: float = 100.0
    y1: float = 100.0

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("workspace must have positive extent")

    def contains(self, p: Point) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0


@dataclass(frozen=True)
class RegionMap:
    """Immutable region knowledge; every update returns a new map."""

    workspace: Workspace = field(default_factory=Workspace)
    crs: tuple[Region, ...] = ()
    tr: Optional[Region] = None
    known_safe: frozenset = frozenset()
    dr_width: float = 5.0
    safety_margin: float = 3.5
    cell: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "crs", tuple(self.crs))
        object.__setattr__(self, "known_safe", frozenset(self.known_safe))
        for r in self.crs:
            if r.kind is not RegionType.CR:
                raise ValueError("crs may only hold CR regions")
        if self.tr is not None and self.tr.kind is not RegionType.TR:
            raise ValueError("tr must be a TR region")
        if self.dr_width < self.safety_margin:
            raise ValueError("dr_width must be at least the safety margin")

    def cell_of(self, p: Point) -> Cell:
        ws = self.workspace
        nx, ny = self.shape
        # points on the far workspace edge belong to the last cell
        return (min(int(math.floor((p[0] - ws.x0) / self.cell)), nx - 1),
                min(int(math.floor((p[1] - ws.y0) / self.cell)), ny - 1))

    def cell_center(self, c: Cell) -> Point:
        ws = self.workspace
        return (ws.x0 + (c[0] + 0.5) * self.cell, ws.y0 + (c[1] + 0.5) * self.cell)

    @property
    def shape(self) -> tuple[int, int]:
        """Number of grid cells along x and y."""
        ws = self.workspace
        return (int(math.ceil(ws.width / self.cell - 1e-9)),
                int(math.ceil(ws.height / self.cell - 1e-9)))

    def with_crs(self, crs: Iterable[Region]) -> "RegionMap":
        return replace(self, crs=tuple(crs))


def classify(rmap: RegionMap, p: Point) -> RegionType:
    """Region type of ``p`` with priority CR > DR > TR > SR > UR."""
    if not rmap.workspace.contains(p):
        raise DomainError(f"point {p} outside workspace")
    in_dr = False
    for r in rmap.crs:
        d = r.distance(p)
        if d <= 0.0:
            return RegionType.CR
        if d <= rmap.dr_width:
            in_dr = True
    if in_dr:
        return RegionType.DR
    if rmap.tr is not None and rmap.tr.distance(p) <= 0.0:
        return RegionType.TR
    if rmap.cell_of(p) in rmap.known_safe:
        return RegionType.SR
    return RegionType.UR


def add_discovered_cr(rmap: RegionMap, est_center: Point, assumed_radius: float) -> RegionMap:
    new = Region(est_center, assumed_radius, RegionType.CR)
    reach = assumed_radius + rmap.dr_width
    # SR cells touching the new CR or its DR lose their status
    keep = frozenset(
        c for c in rmap.known_safe if not _cell_touches(rmap, c, new.center, reach)
    )
    return replace(rmap, crs=rmap.crs + (new,), known_safe=keep)


def _cell_touches(rmap: RegionMap, c: Cell, center: Point, reach: float) -> bool:
    # nearest point of the cell square to the disc centre
    ws = rmap.workspace
    x0 = ws.x0 + c[0] * rmap.cell
    y0 = ws.y0 + c[1] * rmap.cell
    nx = min(max(center[0], x0), x0 + rmap.cell)
    ny = min(max(center[1], y0), y0 + rmap.cell)
    return math.hypot(nx - center[0], ny - center[1]) <= reach


def mark_safe(rmap: RegionMap, cells: Iterable[Cell]) -> RegionMap:
    """Promote UR cells to SR.

    Cells are stored regardless of their current class; ``classify`` applies
    the priority order, so a marked cell inside a CR still reads as CR.
    """
    nx, ny = rmap.shape
    cells = [tuple(c) for c in cells]
    for c in cells:
        if not (0 <= c[0] < nx and 0 <= c[1] < ny):
            raise DomainError(f"cell {c} outside workspace grid")
    added = frozenset(cells) - rmap.known_safe
    if not added:
        return rmap
    return replace(rmap, known_safe=rmap.known_safe | added)


def validate_margins(rmap: RegionMap, max_step: float, max_sensor_error: float) -> bool:
    if not max_step > 0:
        raise ValueError("max_step must be positive")
    return rmap.dr_width > max_step + max_sensor_error


def min_clearance(rmap: RegionMap, path: Sequence[Point]) -> float:
    """Smallest distance from any path point to the nearest CR boundary."""
    if len(path) == 0:
        raise ValueError("path must be nonempty")
    if not rmap.crs:
        return CLEARANCE_SENTINEL
    pts = np.asarray(path, dtype=float).reshape(-1, 2)
    centers = np.array([r.center for r in rmap.crs])
    radii = np.array([r.radius for r in rmap.crs])
    d = np.hypot(pts[:, None, 0] - centers[None, :, 0], pts[:, None, 1] - centers[None, :, 1])
    return float((d - radii[None, :]).min())


def blocked_points(rmap: RegionMap, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """Vectorised CR-or-DR test, inflated by ``margin``, for an ``(..., 2)`` array."""
    pts = np.asarray(pts, dtype=float)
    out = np.zeros(pts.shape[:-1], dtype=bool)
    for r in rmap.crs:
        reach = r.radius + rmap.dr_width + margin
        dx = pts[..., 0] - r.center[0]
        dy = pts[..., 1] - r.center[1]
        out |= dx * dx + dy * dy <= reach * reach
    return out


def dr_penetration(crs: Sequence[Region], dr_width: float, p: Point) -> float:
    """Depth of ``p`` inside the deepest DR annulus (0 outside every DR)."""
    depth = 0.0
    for r in crs:
        d = r.distance(p)
        if d <= dr_width:
            depth = max(depth, dr_width - d)
    return depth
