"""Synthetic scenes: sphere "plants" over a floor plane against a keying-blue
backdrop, rendered by deterministic ray casting with per-pixel ground truth."""

import json
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .camera import BoundingSphere, CameraIntrinsics, CameraPose
from .spatial import Point3

RGB = tuple[int, int, int]

DEFAULT_BACKGROUND: RGB = (0, 70, 160)  # saturated keying blue, CIELAB b < 0
DEFAULT_FLOOR: RGB = (101, 67, 33)  # dark soil tone, CIELAB b > 0

LABEL_BACKGROUND = 0
LABEL_FLOOR = -1


@dataclass(frozen=True)
class PlantTarget:
    """A plant standing at a known floor position, modeled by its bounding
    sphere resting on the floor."""

    plant_id: str
    label: str
    scientific_name: str
    position_id: int
    position: Point3
    bounding_radius: float
    render_color: RGB
    date_planted: date

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "render_color", tuple(int(v) for v in self.render_color))
        if self.bounding_radius <= 0.0:
            raise ValueError(f"bounding_radius must be > 0, got {self.bounding_radius!r}")
        if self.position_id < 0:
            raise ValueError("position_id must be >= 0")

    def bounding_sphere(self) -> BoundingSphere:
        x, y, z = self.position
        return BoundingSphere((x, y, z + self.bounding_radius), self.bounding_radius)


@dataclass(frozen=True)
class Scene:
    plants: tuple[PlantTarget, ...]
    background_color: RGB = DEFAULT_BACKGROUND
    floor_color: RGB = DEFAULT_FLOOR
    floor_z: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "plants", tuple(self.plants))
        ids = [p.plant_id for p in self.plants]
        if len(set(ids)) != len(ids):
            raise ValueError("plant_id values must be unique within a scene")
        positions = [p.position for p in self.plants]
        if len(set(positions)) != len(positions):
            raise ValueError("plant positions must be pairwise distinct")


@dataclass
class RenderResult:
    """Rendered RGB image plus the per-pixel ground-truth label map.

    Labels: 0 background, -1 floor, i+1 the scene's plants[i].
    """

    image: np.ndarray  # (h, w, 3) uint8
    labels: np.ndarray  # (h, w) int16

    def plant_mask(self, plant_index: int) -> np.ndarray:
        return self.labels == plant_index + 1

    def foreground_mask(self) -> np.ndarray:
        """Everything that is not keying background (plants and floor)."""
        return self.labels != LABEL_BACKGROUND


def render(
    scene: Scene,
    pose: CameraPose,
    k: CameraIntrinsics = CameraIntrinsics(),
    scale: int = 1,
) -> RenderResult:
    """Ray-cast the scene from a pose at the intrinsics downsampled by ``scale``.

    Each pixel takes the color and label of the nearest sphere hit along the
    ray through its center, else the floor plane, else the background. No
    anti-aliasing; output is a pure function of the inputs.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    kr = k.scaled(scale)
    w, h, f = kr.width, kr.height, kr.focal_length_px

    u = (np.arange(w) + 0.5 - w / 2.0) / f
    v = (np.arange(h) + 0.5 - h / 2.0) / f
    d_cam = np.empty((h, w, 3))
    d_cam[..., 0] = 1.0
    d_cam[..., 1] = -u[None, :]
    d_cam[..., 2] = -v[:, None]
    d = d_cam @ pose.rotation_camera_to_world().T
    origin = np.asarray(pose.optical_center())

    labels = np.full((h, w), LABEL_BACKGROUND, dtype=np.int16)
    dz = d[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_floor = (scene.floor_z - origin[2]) / dz
    t_best = np.where((dz != 0.0) & (t_floor > 0.0), t_floor, np.inf)
    labels[np.isfinite(t_best)] = LABEL_FLOOR

    a = np.einsum("...i,...i->...", d, d)
    for idx, plant in enumerate(scene.plants):
        sphere = plant.bounding_sphere()
        oc = origin - np.asarray(sphere.center)
        b = d @ oc
        c0 = float(oc @ oc) - sphere.radius**2
        disc = b * b - a * c0
        hit = disc >= 0.0
        t = np.where(hit, (-b - np.sqrt(np.where(hit, disc, 0.0))) / a, np.inf)
        take = (t > 1e-9) & (t < t_best)
        t_best = np.where(take, t, t_best)
        labels[take] = idx + 1

    palette = np.array(
        [scene.floor_color, scene.background_color]
        + [p.render_color for p in scene.plants],
        dtype=np.uint8,
    )
    image = palette[labels + 1]
    return RenderResult(image=image, labels=labels)


def expected_disc_radius_px(
    distance: float, radius: float, k: CameraIntrinsics, scale: int = 1
) -> float:
    """Image radius, in pixels, of a sphere centered on the optical axis."""
    kr = k.scaled(scale)
    return kr.focal_length_px * math.tan(math.asin(radius / distance))


def _plant_from_dict(data: dict) -> PlantTarget:
    return PlantTarget(
        plant_id=data["plant_id"],
        label=data["label"],
        scientific_name=data["scientific_name"],
        position_id=int(data["position_id"]),
        position=tuple(data["position"]),
        bounding_radius=float(data["bounding_radius"]),
        render_color=tuple(data.get("render_color", (58, 129, 51))),
        date_planted=date.fromisoformat(data["date_planted"]),
    )


def scene_from_dict(data: dict) -> Scene:
    return Scene(
        plants=tuple(_plant_from_dict(p) for p in data.get("plants", [])),
        background_color=tuple(data.get("background_color", DEFAULT_BACKGROUND)),
        floor_color=tuple(data.get("floor_color", DEFAULT_FLOOR)),
        floor_z=float(data.get("floor_z", 0.0)),
    )


def scene_to_dict(scene: Scene) -> dict:
    return {
        "background_color": list(scene.background_color),
        "floor_color": list(scene.floor_color),
        "floor_z": scene.floor_z,
        "plants": [
            {
                "plant_id": p.plant_id,
                "label": p.label,
                "scientific_name": p.scientific_name,
                "position_id": p.position_id,
                "position": list(p.position),
                "bounding_radius": p.bounding_radius,
                "render_color": list(p.render_color),
                "date_planted": p.date_planted.isoformat(),
            }
            for p in scene.plants
        ],
    }


def load_scene(path: str | Path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))
