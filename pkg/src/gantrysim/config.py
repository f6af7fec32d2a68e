"""Toolkit configuration: one JSON file covering gantry, motion, camera,
timing, routing, and run-output settings. Missing keys fall back to the
production defaults baked into the module dataclasses."""

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .camera import CameraIntrinsics
from .kinematics import AxisConfig, MotionContext, MotionProfile, SteppingMode, default_axes
from .routing import ZigzagParams
from .simulate import DEFAULT_START_TIME, TimingConfig
from .spatial import Cuboid, Point3


@dataclass(frozen=True)
class RunSettings:
    """Free-text metadata fields plus naming/classing knobs for run output."""

    room: str = "room-a"
    institute: str = "desk-lab"
    camera: str = "simcam"
    lens: str = "rectilinear-98.7deg"
    start_time: datetime = DEFAULT_START_TIME
    filename_ext: str = "png"  # "jpg" emulates the legacy naming only
    edge_margin: float = 50.0

    def __post_init__(self):
        if self.filename_ext not in ("png", "jpg"):
            raise ValueError("filename_ext must be 'png' or 'jpg'")
        if self.edge_margin < 0.0:
            raise ValueError("edge_margin must be >= 0")


@dataclass(frozen=True)
class ToolkitConfig:
    motion: MotionContext = MotionContext()
    intrinsics: CameraIntrinsics = CameraIntrinsics()
    head_offset: Point3 = (0.0, 0.0, 0.0)
    timing: TimingConfig = TimingConfig()
    zigzag: ZigzagParams = ZigzagParams()
    render_scale: int = 4
    legacy_origin: bool = False
    run: RunSettings = RunSettings()

    def __post_init__(self):
        if self.render_scale < 1:
            raise ValueError("render_scale must be >= 1")

    @property
    def volume(self) -> Cuboid:
        return self.motion.volume


def _axis_from_dict(data: dict, default: AxisConfig) -> AxisConfig:
    return AxisConfig(
        distance_per_rev=float(data.get("distance_per_rev", default.distance_per_rev)),
        step_angle_fraction=float(
            data.get("step_angle_fraction", default.step_angle_fraction)
        ),
        gear_ratio=float(data.get("gear_ratio", default.gear_ratio)),
        travel_limit=float(data.get("travel_limit", default.travel_limit)),
    )


def config_from_dict(data: dict) -> ToolkitConfig:
    defaults = ToolkitConfig()

    axes_data = data.get("gantry", {}).get("axes", {})
    axes = tuple(
        _axis_from_dict(axes_data.get(name, {}), default)
        for name, default in zip("xyz", default_axes())
    )

    motion_data = data.get("motion", {})
    mode_name = str(motion_data.get("stepping_mode", "half")).upper()
    if mode_name not in SteppingMode.__members__:
        raise ValueError(f"unknown stepping_mode {mode_name!r} (use 'full' or 'half')")
    motion = MotionContext(
        profile=MotionProfile(
            peak_pulse_rate=float(motion_data.get("peak_pulse_rate", 3000.0)),
            acceleration=float(motion_data.get("acceleration", 10000.0)),
        ),
        mode=SteppingMode[mode_name],
        axes=axes,
        parallel=bool(motion_data.get("parallel_axes", False)),
        pan_tilt_overhead=float(motion_data.get("pan_tilt_overhead", 0.0)),
    )

    camera_data = data.get("camera", {})
    intrinsics = CameraIntrinsics(
        width=int(camera_data.get("width", defaults.intrinsics.width)),
        height=int(camera_data.get("height", defaults.intrinsics.height)),
        horizontal_fov_deg=float(
            camera_data.get("horizontal_fov_deg", defaults.intrinsics.horizontal_fov_deg)
        ),
    )
    head_offset = tuple(float(v) for v in camera_data.get("head_offset", (0.0, 0.0, 0.0)))

    timing_data = data.get("timing", {})
    timing = TimingConfig(
        settle_pause=float(timing_data.get("settle_pause", defaults.timing.settle_pause)),
        capture_time=float(timing_data.get("capture_time", defaults.timing.capture_time)),
        download_time_per_image=float(
            timing_data.get(
                "download_time_per_image", defaults.timing.download_time_per_image
            )
        ),
    )

    routing_data = data.get("routing", {})
    zigzag = ZigzagParams(
        slab_width=float(routing_data.get("slab_width", defaults.zigzag.slab_width)),
        column_width=float(routing_data.get("column_width", defaults.zigzag.column_width)),
    )

    run_data = data.get("run", {})
    run = RunSettings(
        room=str(run_data.get("room", defaults.run.room)),
        institute=str(run_data.get("institute", defaults.run.institute)),
        camera=str(run_data.get("camera", defaults.run.camera)),
        lens=str(run_data.get("lens", defaults.run.lens)),
        start_time=datetime.fromisoformat(
            run_data.get("start_time", defaults.run.start_time.isoformat())
        ),
        filename_ext=str(run_data.get("filename_ext", defaults.run.filename_ext)),
        edge_margin=float(run_data.get("edge_margin", defaults.run.edge_margin)),
    )

    return ToolkitConfig(
        motion=motion,
        intrinsics=intrinsics,
        head_offset=head_offset,
        timing=timing,
        zigzag=zigzag,
        render_scale=int(data.get("render_scale", defaults.render_scale)),
        legacy_origin=bool(data.get("legacy_origin", defaults.legacy_origin)),
        run=run,
    )


def load_config(path: str | Path | None) -> ToolkitConfig:
    if path is None:
        return ToolkitConfig()
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
