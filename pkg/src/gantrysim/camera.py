"""Camera geometry: world/camera/image transforms, sphere-to-box projection,
floor-plane inverse projection, aiming, and pose-ring generation.

Conventions used throughout this module:

- World frame: right-handed, Z up, millimeters. The gantry origin corner is
  (0, 0, 0).
- Camera frame: +X forward (optical axis), +Y left, +Z up, millimeters.
  A point must have X > 0 to be imaged.
- Image frame: pixel coordinates (u, v) with the origin at the top-left
  corner, u to the right, v downward. Normalized boxes divide by the image
  size, so (0, 0) is top-left and (1, 1) bottom-right.
- Pose angles: pan is the azimuth of the optical axis about the world Z
  axis (0 = +X), tilt its elevation (0 = horizontal, -90 = straight down).
  Rotation order is pan about world Z, then tilt about the camera Y axis.
  Angles are degrees in every public structure and radians internally.

The projection is a perfect rectilinear pinhole: the focal length in
pixels is (width/2) / tan(horizontal_fov/2), and the vertical field of
view follows from the shared focal length and the sensor aspect ratio.
"""

import math
from dataclasses import dataclass

import numpy as np

from .spatial import Cuboid, Point3, PositionClass


class GeometryError(ValueError):
    """A projection or pose construction is geometrically impossible."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Sensor resolution and horizontal field of view (degrees)."""

    width: int = 4000
    height: int = 3000
    horizontal_fov_deg: float = 98.7

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be > 0")
        if not 0.0 < self.horizontal_fov_deg < 180.0:
            raise ValueError("horizontal_fov_deg must be in (0, 180)")

    @property
    def focal_length_px(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.horizontal_fov_deg) / 2.0)

    @property
    def principal_point(self) -> tuple[float, float]:
        return (self.width / 2.0, self.height / 2.0)

    def scaled(self, scale: int) -> "CameraIntrinsics":
        """Intrinsics of the same camera downsampled by an integer factor."""
        if scale < 1:
            raise ValueError("scale must be >= 1")
        return CameraIntrinsics(
            width=max(1, round(self.width / scale)),
            height=max(1, round(self.height / scale)),
            horizontal_fov_deg=self.horizontal_fov_deg,
        )


@dataclass(frozen=True)
class CameraPose:
    """Gantry-head position plus pan/tilt, and the optical-center offset.

    ``head_offset`` is the displacement of the optical center from the
    gantry-head reference point, expressed in the panned/tilted camera
    frame. It defaults to zero.
    """

    position: Point3
    pan_deg: float = 0.0
    tilt_deg: float = 0.0
    head_offset: Point3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "head_offset", tuple(float(v) for v in self.head_offset))
        if not -180.0 <= self.pan_deg <= 180.0:
            raise ValueError(f"pan_deg must be in [-180, 180], got {self.pan_deg!r}")
        if not -90.0 <= self.tilt_deg <= 90.0:
            raise ValueError(f"tilt_deg must be in [-90, 90], got {self.tilt_deg!r}")

    def rotation_camera_to_world(self) -> np.ndarray:
        """3x3 rotation taking camera-frame vectors to world-frame vectors."""
        pan = math.radians(self.pan_deg)
        tilt = math.radians(self.tilt_deg)
        cp, sp = math.cos(pan), math.sin(pan)
        ct, st = math.cos(tilt), math.sin(tilt)
        rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
        ry = np.array([[ct, 0.0, -st], [0.0, 1.0, 0.0], [st, 0.0, ct]])
        return rz @ ry

    def optical_center(self) -> Point3:
        c = np.asarray(self.position) + self.rotation_camera_to_world() @ np.asarray(
            self.head_offset
        )
        return (float(c[0]), float(c[1]), float(c[2]))


@dataclass(frozen=True)
class BoundingSphere:
    """Conservative sphere enclosing a plant, world frame."""

    center: Point3
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if self.radius <= 0.0:
            raise ValueError(f"radius must be > 0, got {self.radius!r}")


@dataclass(frozen=True)
class NormalizedBox:
    """Axis-aligned image box as fractions of the image size, top-left origin."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (0.0 <= self.x_min < self.x_max <= 1.0):
            raise ValueError(f"invalid x range [{self.x_min}, {self.x_max}]")
        if not (0.0 <= self.y_min < self.y_max <= 1.0):
            raise ValueError(f"invalid y range [{self.y_min}, {self.y_max}]")

    def mirrored_x(self) -> "NormalizedBox":
        """The same box under the mirrored (right-origin) x convention."""
        return NormalizedBox(1.0 - self.x_max, 1.0 - self.x_min, self.y_min, self.y_max)


def world_to_camera(pose: CameraPose, p: Point3) -> Point3:
    """Transform a world point into the camera frame of the given pose."""
    r = pose.rotation_camera_to_world()
    rel = np.asarray(p, dtype=float) - np.asarray(pose.optical_center())
    c = r.T @ rel
    return (float(c[0]), float(c[1]), float(c[2]))


def camera_to_image(
    c: Point3, k: CameraIntrinsics = CameraIntrinsics()
) -> tuple[float, float]:
    """Project a camera-frame point to continuous pixel coordinates.

    u = width/2 - f * Y/X and v = height/2 - f * Z/X, so bearing right of
    the optical axis increases u and elevation above it decreases v.
    """
    x, y, z = c
    if x <= 0.0:
        raise GeometryError(f"point {c} is not in front of the camera")
    f = k.focal_length_px
    return (k.width / 2.0 - f * y / x, k.height / 2.0 - f * z / x)


def project_point(
    pose: CameraPose, p: Point3, k: CameraIntrinsics = CameraIntrinsics()
) -> tuple[float, float]:
    """World point straight to pixel coordinates."""
    return camera_to_image(world_to_camera(pose, p), k)


def image_to_world(
    pose: CameraPose,
    px: tuple[float, float],
    plane_z: float,
    k: CameraIntrinsics = CameraIntrinsics(),
) -> Point3:
    """Invert the projection onto the horizontal plane z = plane_z.

    Returns the world point where the ray through the pixel meets the
    plane; raises GeometryError if the ray is parallel to the plane or
    meets it behind the camera.
    """
    u, v = px
    f = k.focal_length_px
    d_cam = np.array([1.0, -(u - k.width / 2.0) / f, -(v - k.height / 2.0) / f])
    d_world = pose.rotation_camera_to_world() @ d_cam
    origin = np.asarray(pose.optical_center())
    if d_world[2] == 0.0:
        if origin[2] == plane_z:
            raise GeometryError("ray lies within the target plane")
        raise GeometryError("ray is parallel to the target plane")
    t = (plane_z - origin[2]) / d_world[2]
    if t <= 0.0:
        raise GeometryError("ray diverges from the target plane")
    p = origin + t * d_world
    return (float(p[0]), float(p[1]), float(p[2]))


def aim_at(camera_position: Point3, target: Point3) -> tuple[float, float]:
    """Pan/tilt angles (degrees) that put ``target`` on the optical axis
    of a camera at ``camera_position`` with zero head offset."""
    dx = target[0] - camera_position[0]
    dy = target[1] - camera_position[1]
    dz = target[2] - camera_position[2]
    if dx == 0.0 and dy == 0.0 and dz == 0.0:
        raise ValueError("camera position and target coincide")
    pan = math.degrees(math.atan2(dy, dx))
    tilt = math.degrees(math.atan2(dz, math.hypot(dx, dy)))
    return (pan, tilt)


# Conservative padding, in normalized units, applied to sphere boxes so that
# floating-point rounding at the silhouette can never push a rendered sphere
# pixel outside its box.
BOX_GUARD = 1e-9


def _tangent_extent(axial: float, lateral: float, radius: float, f: float) -> tuple[float, float]:
    """Extent of a sphere image along one image axis, about the principal point.

    Working in the 2D plane spanned by the optical axis and one lateral
    camera axis: the sphere projects onto a disc of the same radius, and
    the image extent along that axis is bounded by the two tangent lines
    through the camera. For disc center at (axial, lateral) the tangents
    sit at angles atan2(lateral, axial) +/- asin(radius / dist) and map to
    image offsets -f * tan(angle).
    """
    dist = math.hypot(axial, lateral)
    theta = math.atan2(lateral, axial)
    omega = math.asin(min(1.0, radius / dist))
    a = -f * math.tan(theta + omega)
    b = -f * math.tan(theta - omega)
    return (min(a, b), max(a, b))


def project_sphere_box(
    pose: CameraPose,
    sphere: BoundingSphere,
    k: CameraIntrinsics = CameraIntrinsics(),
) -> NormalizedBox:
    """Normalized image box guaranteed to contain the sphere's full image.

    The bounds come from extremal tangent rays computed per image axis,
    clipped to the frame. Raises GeometryError when the camera is inside
    the sphere, when the sphere is not entirely in front of the camera,
    or when its image misses the frame entirely.
    """
    cx, cy, cz = world_to_camera(pose, sphere.center)
    r = sphere.radius
    if math.hypot(cx, cy, cz) <= r:
        raise GeometryError("camera is inside the bounding sphere")
    if cx <= r:
        raise GeometryError("bounding sphere is not fully in front of the camera")
    f = k.focal_length_px
    u_lo, u_hi = _tangent_extent(cx, cy, r, f)
    v_lo, v_hi = _tangent_extent(cx, cz, r, f)
    x_min = (u_lo + k.width / 2.0) / k.width - BOX_GUARD
    x_max = (u_hi + k.width / 2.0) / k.width + BOX_GUARD
    y_min = (v_lo + k.height / 2.0) / k.height - BOX_GUARD
    y_max = (v_hi + k.height / 2.0) / k.height + BOX_GUARD
    x_min, x_max = max(0.0, x_min), min(1.0, x_max)
    y_min, y_max = max(0.0, y_min), min(1.0, y_max)
    if x_min >= x_max or y_min >= y_max:
        raise GeometryError("sphere image lies outside the frame")
    return NormalizedBox(x_min, x_max, y_min, y_max)


def pose_to_dict(pose: CameraPose) -> dict:
    return {
        "position": list(pose.position),
        "pan": pose.pan_deg,
        "tilt": pose.tilt_deg,
        "head_offset": list(pose.head_offset),
    }


def pose_from_dict(data: dict, head_offset: Point3 = (0.0, 0.0, 0.0)) -> CameraPose:
    """Pose from a JSON entry: explicit pan/tilt, or a target to aim at."""
    position = tuple(float(v) for v in data["position"])
    offset = tuple(float(v) for v in data.get("head_offset", head_offset))
    if "target" in data:
        if "pan" in data or "tilt" in data:
            raise ValueError("give either target or pan/tilt, not both")
        pan, tilt = aim_at(position, tuple(float(v) for v in data["target"]))
    else:
        pan = float(data.get("pan", 0.0))
        tilt = float(data.get("tilt", 0.0))
    return CameraPose(position=position, pan_deg=pan, tilt_deg=tilt, head_offset=offset)


def _inward_normal_xy(target: Point3, volume: Cuboid) -> tuple[float, float]:
    """Unit XY direction pointing from the nearest volume side(s) inward."""
    x, y = target[0], target[1]
    sides = (
        (x - volume.min_corner[0], (1.0, 0.0)),
        (volume.max_corner[0] - x, (-1.0, 0.0)),
        (y - volume.min_corner[1], (0.0, 1.0)),
        (volume.max_corner[1] - y, (0.0, -1.0)),
    )
    nearest = min(d for d, _ in sides)
    nx = sum(n[0] for d, n in sides if d <= nearest + 1e-9)
    ny = sum(n[1] for d, n in sides if d <= nearest + 1e-9)
    norm = math.hypot(nx, ny)
    if norm == 0.0:  # opposing sides tied; direction is arbitrary but fixed
        return (1.0, 0.0)
    return (nx / norm, ny / norm)


def generate_poses(
    target: Point3,
    position_class: PositionClass,
    radii: list[float],
    heights: list[float],
    count_per_ring: int,
    volume: Cuboid,
) -> list[CameraPose]:
    """Camera poses on rings around a target, every pose aimed at it.

    ``radii`` and ``heights`` pair up one ring each: ring i sits at world
    height heights[i] with XY radius radii[i] around the target. Interior
    targets get full 360-degree rings; edge targets get 180-degree arcs
    facing into the volume. Poses violating the volume bounds are dropped;
    an empty result raises GeometryError.
    """
    if not volume.contains(target):
        raise ValueError(f"target {target} outside volume")
    if count_per_ring < 1:
        raise ValueError("count_per_ring must be >= 1")
    if len(radii) != len(heights) or not radii:
        raise ValueError("radii and heights must pair up one ring each")

    if position_class is PositionClass.EDGE:
        nx, ny = _inward_normal_xy(target, volume)
        base = math.atan2(ny, nx)
        # arc centers on the inward normal; sample offsets keep strictly
        # inside the open inward half-plane
        angles = [
            base - math.pi / 2.0 + (i + 0.5) * math.pi / count_per_ring
            for i in range(count_per_ring)
        ]
    else:
        angles = [i * 2.0 * math.pi / count_per_ring for i in range(count_per_ring)]

    poses: list[CameraPose] = []
    for radius, height in zip(radii, heights):
        if radius <= 0.0:
            raise ValueError("ring radii must be > 0")
        for angle in angles:
            position = (
                target[0] + radius * math.cos(angle),
                target[1] + radius * math.sin(angle),
                height,
            )
            if not volume.contains(position):
                continue
            pan, tilt = aim_at(position, target)
            poses.append(CameraPose(position, pan, tilt))
    if not poses:
        raise GeometryError("no feasible poses inside the volume")
    return poses
