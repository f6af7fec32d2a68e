"""Imaging-run simulation: drives the motion model through a pose sequence,
triggers the (simulated) camera, and collects ground-truth labels per master."""

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Protocol

import numpy as np

from .camera import (
    CameraIntrinsics,
    CameraPose,
    GeometryError,
    NormalizedBox,
    project_sphere_box,
)
from .kinematics import MotionContext, TravelLimitError, move_time
from .scene import PlantTarget, RenderResult, Scene, render

DEFAULT_START_TIME = datetime(2021, 6, 1, 9, 0, 0)

# Table-derived default: bulk download of a full production run amortized
# per master image (2760 s over 2149 images).
DEFAULT_DOWNLOAD_PER_IMAGE = 2760.0 / 2149.0


@dataclass(frozen=True)
class TimingConfig:
    """Per-position timing: settle pause before the trigger, time the camera
    needs per capture, and the amortized bulk-download time per image."""

    settle_pause: float = 3.0
    capture_time: float = 2.7
    download_time_per_image: float = DEFAULT_DOWNLOAD_PER_IMAGE

    def __post_init__(self):
        for name in ("settle_pause", "capture_time", "download_time_per_image"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")


class TriggerCamera(Protocol):
    """Request/response camera interface; a hardware backend can replace the
    simulated one without touching the run loop."""

    def trigger(self, pose: CameraPose) -> RenderResult: ...


@dataclass
class SimulatedCamera:
    scene: Scene
    intrinsics: CameraIntrinsics
    scale: int = 4

    def trigger(self, pose: CameraPose) -> RenderResult:
        return render(self.scene, pose, self.intrinsics, self.scale)


@dataclass(frozen=True)
class PositionTiming:
    """Clock readings (seconds from run start) for one imaging position."""

    pose_number: int
    move_start: float
    move_end: float
    capture_start: float
    capture_end: float


@dataclass
class RunLog:
    start_time: datetime
    timing: TimingConfig
    positions: list[PositionTiming] = field(default_factory=list)
    t_p: float = 0.0

    def __post_init__(self):
        times = [
            t
            for p in self.positions
            for t in (p.move_start, p.move_end, p.capture_start, p.capture_end)
        ]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("run log timestamps must be monotone non-decreasing")

    def to_json_dict(self) -> dict:
        return {
            "start_time": self.start_time.isoformat(),
            "timing": {
                "settle_pause": self.timing.settle_pause,
                "capture_time": self.timing.capture_time,
                "download_time_per_image": self.timing.download_time_per_image,
            },
            "t_p": self.t_p,
            "positions": [
                {
                    "pose_number": p.pose_number,
                    "move_start": p.move_start,
                    "move_end": p.move_end,
                    "capture_start": p.capture_start,
                    "capture_end": p.capture_end,
                }
                for p in self.positions
            ],
        }


@dataclass
class Capture:
    """One master image with its pose, trigger timestamp, ground truth, and
    the geometrically derived box per visible plant."""

    pose_number: int
    pose: CameraPose
    captured_at: datetime
    image: np.ndarray
    labels: np.ndarray
    boxes: list[tuple[PlantTarget, NormalizedBox]]


@dataclass
class SimulationRun:
    log: RunLog
    captures: list[Capture]

    @property
    def n_masters(self) -> int:
        return len(self.captures)

    @property
    def n_subimages(self) -> int:
        return sum(len(c.boxes) for c in self.captures)


def plant_boxes(
    scene: Scene, pose: CameraPose, k: CameraIntrinsics
) -> list[tuple[PlantTarget, NormalizedBox]]:
    """Boxes for every plant whose bounding sphere projects into the frame.

    Purely geometric: derived from known plant positions and the camera
    pose, never from image content. Plants behind the camera or outside
    the frame are simply absent.
    """
    boxes = []
    for plant in scene.plants:
        try:
            box = project_sphere_box(pose, plant.bounding_sphere(), k)
        except GeometryError:
            continue
        boxes.append((plant, box))
    return boxes


def simulate_run(
    scene: Scene,
    poses: list[CameraPose],
    timing: TimingConfig = TimingConfig(),
    motion: MotionContext = MotionContext(),
    intrinsics: CameraIntrinsics = CameraIntrinsics(),
    scale: int = 4,
    start_time: datetime = DEFAULT_START_TIME,
    start_position: tuple[float, float, float] | None = None,
    camera: TriggerCamera | None = None,
) -> SimulationRun:
    """Run the imaging loop over ``poses`` and return log plus captures.

    Per position the clock advances by move time, then the settle pause,
    then the capture time; the camera is triggered at the end of the pause.
    The head starts at ``start_position`` (default: the first pose, i.e. a
    zero-length first move).
    """
    if not poses:
        raise ValueError("simulate_run needs at least one pose")
    volume = motion.volume
    for plant in scene.plants:
        if not volume.footprint_contains(plant.position):
            raise TravelLimitError(
                f"plant {plant.plant_id} at {plant.position} outside the gantry footprint"
            )
    if camera is None:
        camera = SimulatedCamera(scene, intrinsics, scale)

    clock = 0.0
    previous = start_position if start_position is not None else poses[0].position
    log = RunLog(start_time=start_time, timing=timing)
    captures: list[Capture] = []
    for number, pose in enumerate(poses, start=1):
        move_start = clock
        clock += move_time(previous, pose.position, motion)
        move_end = clock
        clock += timing.settle_pause
        capture_start = clock
        result = camera.trigger(pose)
        clock += timing.capture_time
        log.positions.append(
            PositionTiming(number, move_start, move_end, capture_start, clock)
        )
        captures.append(
            Capture(
                pose_number=number,
                pose=pose,
                captured_at=start_time + timedelta(seconds=capture_start),
                image=result.image,
                labels=result.labels,
                boxes=plant_boxes(scene, pose, intrinsics),
            )
        )
        previous = pose.position
    log.t_p = clock
    return SimulationRun(log=log, captures=captures)
