"""Speed, pulse-count, and travel-time models for stepper-driven gantry axes.

Units: millimeters, seconds, pulses/second. All functions are pure.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

from .spatial import Cuboid

HARDWARE_MAX_PULSE_RATE = 4000.0  # controller output ceiling, pulses/s


class TravelLimitError(ValueError):
    """A requested position lies outside an axis travel range.

    Models the normally-closed limit switches: motion planning refuses the
    move instead of simulating an electrical shutdown.
    """


class SteppingMode(enum.Enum):
    """Stepper drive mode; the multiplier scales displacement per pulse."""

    FULL = 1.0
    HALF = 0.5

    @property
    def multiplier(self) -> float:
        return self.value


@dataclass(frozen=True)
class AxisConfig:
    """Mechanical parameters of one stepper-driven linear actuator.

    Defaults: 105 mm of travel per actuator revolution, 1.8 degree step
    angle (1.8/360 of a revolution per step), 5:1 gearbox (ratio 0.2).
    """

    distance_per_rev: float = 105.0
    step_angle_fraction: float = 1.8 / 360.0
    gear_ratio: float = 0.2
    travel_limit: float = 1150.0

    def __post_init__(self):
        for name in (
            "distance_per_rev",
            "step_angle_fraction",
            "gear_ratio",
            "travel_limit",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


def default_axes() -> tuple[AxisConfig, AxisConfig, AxisConfig]:
    """Axis configs with the stock travel limits (1150 x 840 x 718 mm)."""
    return (
        AxisConfig(travel_limit=1150.0),
        AxisConfig(travel_limit=840.0),
        AxisConfig(travel_limit=718.0),
    )


def gantry_volume(axes: Sequence[AxisConfig]) -> Cuboid:
    """Traversable volume spanned by three axis travel limits."""
    x, y, z = axes
    return Cuboid((0.0, 0.0, 0.0), (x.travel_limit, y.travel_limit, z.travel_limit))


@dataclass(frozen=True)
class MotionProfile:
    """Velocity-ramp parameters shared by all axes.

    The controller ramps the pulse rate linearly at ``acceleration`` up to
    ``peak_pulse_rate``, cruises, and ramps back down symmetrically.
    """

    peak_pulse_rate: float = 3000.0
    acceleration: float = 10000.0

    def __post_init__(self):
        if not 0.0 < self.peak_pulse_rate <= HARDWARE_MAX_PULSE_RATE:
            raise ValueError(
                f"peak_pulse_rate must be in (0, {HARDWARE_MAX_PULSE_RATE}], "
                f"got {self.peak_pulse_rate!r}"
            )
        if not (math.isfinite(self.acceleration) and self.acceleration > 0.0):
            raise ValueError(f"acceleration must be positive, got {self.acceleration!r}")


@dataclass(frozen=True)
class MotionContext:
    """Everything needed to time a gantry move: per-axis configs, the shared
    ramp profile, the stepping mode, and whether axes run in parallel."""

    profile: MotionProfile = MotionProfile()
    mode: SteppingMode = SteppingMode.HALF
    axes: tuple[AxisConfig, AxisConfig, AxisConfig] = field(default_factory=default_axes)
    parallel: bool = False
    pan_tilt_overhead: float = 0.0

    def __post_init__(self):
        if self.pan_tilt_overhead < 0.0:
            raise ValueError("pan_tilt_overhead must be >= 0")

    @property
    def volume(self) -> Cuboid:
        return gantry_volume(self.axes)


def axis_speed(
    pulse_rate: float, mode: SteppingMode, cfg: AxisConfig = AxisConfig()
) -> float:
    """Linear axis speed in mm/s for a given pulse rate.

    speed = pulse_rate * distance_per_rev * step_angle_fraction * gear_ratio
    * mode multiplier; with the default axis this is pulse_rate * 0.105 * m.
    """
    if pulse_rate < 0.0:
        raise ValueError(f"pulse_rate must be >= 0, got {pulse_rate!r}")
    # evaluated left to right so the default parameters reproduce the
    # printed 0.105 mm/pulse coefficient exactly in floating point
    return (
        pulse_rate
        * cfg.distance_per_rev
        * cfg.step_angle_fraction
        * cfg.gear_ratio
        * mode.multiplier
    )


def distance_per_pulse(mode: SteppingMode, cfg: AxisConfig = AxisConfig()) -> float:
    """Axis displacement per controller pulse, in mm."""
    return cfg.distance_per_rev * cfg.step_angle_fraction * cfg.gear_ratio * mode.multiplier


def pulses_for_distance(
    distance: float, mode: SteppingMode, cfg: AxisConfig = AxisConfig()
) -> int:
    """Pulse count whose travel best approximates ``distance`` (round to nearest)."""
    if distance < 0.0:
        raise ValueError(f"distance must be >= 0, got {distance!r}")
    return int(round(distance / distance_per_pulse(mode, cfg)))


def axis_travel_time(pulses: int, profile: MotionProfile = MotionProfile()) -> float:
    """Time to emit ``pulses`` under a symmetric trapezoidal rate profile.

    The rate ramps at ``profile.acceleration`` to ``profile.peak_pulse_rate``,
    cruises, then ramps down; moves too short to reach the peak rate use a
    triangular profile peaking at sqrt(acceleration * pulses). Moves start
    and end at rest.
    """
    if pulses < 0:
        raise ValueError(f"pulses must be >= 0, got {pulses!r}")
    if pulses == 0:
        return 0.0
    peak, accel = profile.peak_pulse_rate, profile.acceleration
    ramp_pulses = peak * peak / accel  # pulses consumed by both ramps combined
    if pulses >= ramp_pulses:
        return pulses / peak + peak / accel
    return 2.0 * math.sqrt(pulses / accel)


def check_within_limits(point: Sequence[float], axes: Sequence[AxisConfig]) -> None:
    """Raise TravelLimitError unless every coordinate is in [0, travel_limit]."""
    for name, value, cfg in zip("xyz", point, axes):
        if not 0.0 <= value <= cfg.travel_limit:
            raise TravelLimitError(
                f"{name} = {value} outside travel range [0, {cfg.travel_limit}]"
            )


def move_time(
    start: Sequence[float],
    end: Sequence[float],
    ctx: MotionContext = MotionContext(),
) -> float:
    """Time for the gantry head to move between two in-volume positions.

    Per-axis times come from ``axis_travel_time``; the total is their max
    when axes move in parallel and their sum when they move one after the
    other. Pan/tilt is assumed to finish within the axis motion and
    contributes only the configured fixed overhead (0 by default).
    """
    check_within_limits(start, ctx.axes)
    check_within_limits(end, ctx.axes)
    times = [
        axis_travel_time(pulses_for_distance(abs(b - a), ctx.mode, cfg), ctx.profile)
        for a, b, cfg in zip(start, end, ctx.axes)
    ]
    total = max(times) if ctx.parallel else sum(times)
    return total + ctx.pan_tilt_overhead
