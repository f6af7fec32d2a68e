"""Shared spatial primitives: points, axis-aligned volumes, position classes."""

import enum
import math
from dataclasses import dataclass
from typing import Sequence

Point3 = tuple[float, float, float]


class PositionClass(enum.Enum):
    """Whether a plant location sits on the edge of the traversable volume
    (camera poses restricted to the inward-facing side) or in its interior
    (full rings of poses available)."""

    EDGE = "Edge"
    INTERIOR = "Interior"


@dataclass(frozen=True)
class Cuboid:
    """Axis-aligned cuboid given by its minimum and maximum corners, in mm."""

    min_corner: Point3
    max_corner: Point3

    def __post_init__(self):
        for lo, hi in zip(self.min_corner, self.max_corner):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(
                    f"degenerate cuboid: {self.min_corner} .. {self.max_corner}"
                )

    def contains(self, p: Sequence[float]) -> bool:
        return all(
            lo <= v <= hi
            for v, lo, hi in zip(p, self.min_corner, self.max_corner)
        )

    def footprint_contains(self, p: Sequence[float]) -> bool:
        """True if the XY projection of ``p`` lies inside the XY footprint."""
        return (
            self.min_corner[0] <= p[0] <= self.max_corner[0]
            and self.min_corner[1] <= p[1] <= self.max_corner[1]
        )

    @property
    def center(self) -> Point3:
        return tuple(
            0.5 * (lo + hi) for lo, hi in zip(self.min_corner, self.max_corner)
        )

    def boundary_distance_xy(self, p: Sequence[float]) -> float:
        """Distance from a footprint point to the nearest XY boundary face."""
        return min(
            p[0] - self.min_corner[0],
            self.max_corner[0] - p[0],
            p[1] - self.min_corner[1],
            self.max_corner[1] - p[1],
        )
