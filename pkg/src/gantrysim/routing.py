"""Orders camera waypoints for a run: nested zig-zag planner plus
nearest-neighbor and exhaustive comparison planners."""

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .kinematics import MotionContext, move_time
from .spatial import Cuboid, Point3


@dataclass(frozen=True)
class WaypointSet:
    """Distinct XYZ positions (mm, world frame) inside a cuboid volume."""

    positions: tuple[Point3, ...]
    volume: Cuboid

    def __post_init__(self):
        object.__setattr__(
            self, "positions", tuple(tuple(float(v) for v in p) for p in self.positions)
        )
        seen = set()
        for p in self.positions:
            if p in seen:
                raise ValueError(f"duplicate waypoint {p}")
            seen.add(p)
            if not self.volume.contains(p):
                raise ValueError(f"waypoint {p} outside volume")

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class ZigzagParams:
    """Bucket widths for the serpentine traversal: slabs along X, columns
    along Y inside each slab."""

    slab_width: float = 150.0
    column_width: float = 150.0

    def __post_init__(self):
        if self.slab_width <= 0.0 or self.column_width <= 0.0:
            raise ValueError("slab_width and column_width must be > 0")


@dataclass(frozen=True)
class Route:
    """A visiting order over a waypoint set, as a permutation of indices."""

    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("route order is not a permutation of 0..N-1")


@dataclass(frozen=True)
class RouteCost:
    seconds: float
    millimeters: float
    leg_seconds: tuple[float, ...]
    leg_millimeters: tuple[float, ...]


def plan_zigzag(wset: WaypointSet, params: ZigzagParams = ZigzagParams()) -> Route:
    """Serpentine traversal of the waypoint volume.

    Positions are bucketed into slabs along X and, within each slab, into
    columns along Y (half-open intervals anchored at the volume's minimum
    corner). Slabs are visited in +X order starting at the one containing
    the origin corner. Columns run in +Y through the first visited slab,
    -Y through the second, and so on; within a column the head sweeps Z
    upward, then downward in the next column, the alternation continuing
    across slab boundaries. Z ties are broken by ascending (X, Y).
    """
    if not wset.positions:
        raise ValueError("cannot plan a route over an empty waypoint set")
    x0, y0, _ = wset.volume.min_corner
    slabs: dict[int, dict[int, list[int]]] = {}
    for idx, (x, y, _z) in enumerate(wset.positions):
        si = math.floor((x - x0) / params.slab_width)
        ci = math.floor((y - y0) / params.column_width)
        slabs.setdefault(si, {}).setdefault(ci, []).append(idx)

    order: list[int] = []
    ascending_z = True
    for visit, si in enumerate(sorted(slabs)):
        columns = slabs[si]
        forward = visit % 2 == 0  # +Y in the first visited slab, then alternate
        for ci in sorted(columns, reverse=not forward):
            sign = 1.0 if ascending_z else -1.0
            order.extend(
                sorted(
                    columns[ci],
                    key=lambda i: (
                        sign * wset.positions[i][2],
                        wset.positions[i][0],
                        wset.positions[i][1],
                    ),
                )
            )
            ascending_z = not ascending_z
    return Route(tuple(order))


def _distance(a: Point3, b: Point3) -> float:
    return math.dist(a, b)


def route_cost(
    route: Route, wset: WaypointSet, ctx: MotionContext = MotionContext()
) -> RouteCost:
    """Total travel time and distance over the route's consecutive legs."""
    if len(route.order) != len(wset):
        raise ValueError("route and waypoint set sizes differ")
    leg_s: list[float] = []
    leg_mm: list[float] = []
    for i, j in zip(route.order, route.order[1:]):
        a, b = wset.positions[i], wset.positions[j]
        leg_s.append(move_time(a, b, ctx))
        leg_mm.append(_distance(a, b))
    return RouteCost(sum(leg_s), sum(leg_mm), tuple(leg_s), tuple(leg_mm))


def nearest_neighbor_route(wset: WaypointSet) -> Route:
    """Greedy route: repeatedly hop to the nearest unvisited waypoint,
    starting from the volume's origin corner. Ties go to the lowest index."""
    if not wset.positions:
        raise ValueError("cannot plan a route over an empty waypoint set")
    remaining = set(range(len(wset)))
    current: Sequence[float] = wset.volume.min_corner
    order: list[int] = []
    while remaining:
        best = min(remaining, key=lambda i: (_distance(tuple(current), wset.positions[i]), i))
        order.append(best)
        remaining.discard(best)
        current = wset.positions[best]
    return Route(tuple(order))


BRUTE_FORCE_MAX = 10


def brute_force_tsp(wset: WaypointSet) -> Route:
    """Minimum-total-distance open path over all waypoint permutations.

    Exhaustive, so limited to 10 waypoints. Equal-cost permutations resolve
    to the lexicographically smallest one.
    """
    n = len(wset)
    if n == 0:
        raise ValueError("cannot plan a route over an empty waypoint set")
    if n > BRUTE_FORCE_MAX:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX} waypoints, got {n}")
    dist = [
        [_distance(a, b) for b in wset.positions] for a in wset.positions
    ]
    best_cost = math.inf
    best_perm: tuple[int, ...] | None = None
    for perm in itertools.permutations(range(n)):
        total = 0.0
        prev = perm[0]
        for nxt in perm[1:]:
            total += dist[prev][nxt]
            if total >= best_cost:
                break
            prev = nxt
        else:
            if total < best_cost:
                best_cost = total
                best_perm = perm
    assert best_perm is not None
    return Route(best_perm)


def route_to_json_dict(route: Route) -> list[int]:
    return list(route.order)


def route_from_json_dict(data: Sequence[int]) -> Route:
    return Route(tuple(data))
