"""Labeled-dataset emission and ingestion.

Covers subimage cropping, the version-1.5 per-master metadata schema
(emit, parse, strict validation), position classing, and the on-disk run
layout::

    <run>/masters/      full captures plus -bb box-overlay copies
    <run>/subimages/    per-plant crops sorted into Edge/ and Interior/
    <run>/metadata/     one JSON document per master image
    <run>/run_log.json  simulated clock and totals

Master files are named yyyymmddhhmmss-pose<N>.<ext>, box overlays insert
-bb after the pose number, and subimage names concatenate the capture
timestamp with the plant's position ID. Box coordinates are stored as
fractions of the master size with a top-left origin; a legacy flag mirrors
the x axis for byte-compatibility with the older right-origin convention.
"""

import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import numpy as np

from . import ioutil
from .camera import CameraPose, NormalizedBox
from .scene import Scene
from .simulate import Capture, SimulationRun
from .spatial import Cuboid, Point3, PositionClass

SCHEMA_VERSION = "1.5"

MASTER_NAME_RE = re.compile(r"^(\d{14})-pose(\d+)\.(jpg|png)$")
BB_NAME_RE = re.compile(r"^(\d{14})-pose(\d+)-bb\.(jpg|png)$")
SUBIMAGE_NAME_RE = re.compile(r"^(\d{14})(\d+)\.(jpg|png)$")
DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
TIME_RE = re.compile(r"^\d{2}:\d{2}:\d{2}$")

TOP_LEVEL_FIELDS = (
    "version",
    "file_name",
    "bb_file_name",
    "date",
    "time",
    "room",
    "institute",
    "camera",
    "lens",
    "camera_pose",
    "bounding_boxes",
)
POSE_FIELDS = ("x", "y", "z", "polar", "azimuthal")
SUBIMAGE_FIELDS = (
    "plant_id",
    "label",
    "scientific_name",
    "position_id",
    "subimage_file_name",
    "date_planted",
    "x_min",
    "x_max",
    "y_min",
    "y_max",
)


class CropError(ValueError):
    """A normalized box rounds to an empty pixel rectangle."""


class MetadataError(ValueError):
    """A record violates the metadata schema; ``errors`` lists field paths."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def timestamp_token(when: datetime) -> str:
    return when.strftime("%Y%m%d%H%M%S")


def master_file_name(when: datetime, pose_number: int, ext: str = "png") -> str:
    return f"{timestamp_token(when)}-pose{pose_number}.{ext}"


def bb_file_name_for(file_name: str) -> str:
    stem, ext = file_name.rsplit(".", 1)
    return f"{stem}-bb.{ext}"


def subimage_file_name(when: datetime, position_id: int, ext: str = "png") -> str:
    return f"{timestamp_token(when)}{position_id}.{ext}"


@dataclass(frozen=True)
class MetadataPose:
    """Camera pose as stored in metadata: position plus polar/azimuthal
    angles in degrees (polar 0 = straight up, 90 = horizontal)."""

    x: float
    y: float
    z: float
    polar: float
    azimuthal: float

    @classmethod
    def from_camera_pose(cls, pose: CameraPose) -> "MetadataPose":
        x, y, z = pose.position
        return cls(x=x, y=y, z=z, polar=90.0 - pose.tilt_deg, azimuthal=pose.pan_deg)

    def to_camera_pose(self) -> CameraPose:
        return CameraPose(
            position=(self.x, self.y, self.z),
            pan_deg=self.azimuthal,
            tilt_deg=90.0 - self.polar,
        )


@dataclass(frozen=True)
class SubimageRecord:
    plant_id: str
    label: str
    scientific_name: str
    position_id: int
    subimage_file_name: str
    date_planted: date
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def box(self) -> NormalizedBox:
        return NormalizedBox(self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass(frozen=True)
class MasterImageRecord:
    file_name: str
    bb_file_name: str
    date: str
    time: str
    room: str
    institute: str
    camera: str
    lens: str
    camera_pose: MetadataPose
    bounding_boxes: tuple[SubimageRecord, ...] = ()
    version: str = SCHEMA_VERSION


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_record(record: MasterImageRecord) -> list[str]:
    """Invariant check on an in-memory record; returns field-path errors."""
    errors: list[str] = []
    if record.version != SCHEMA_VERSION:
        errors.append(f"version: expected {SCHEMA_VERSION!r}, got {record.version!r}")
    m = MASTER_NAME_RE.match(record.file_name)
    if not m:
        errors.append(f"file_name: {record.file_name!r} does not match the "
                      "yyyymmddhhmmss-pose<N> pattern")
    else:
        if record.bb_file_name != bb_file_name_for(record.file_name):
            errors.append("bb_file_name: must equal file_name with -bb after the pose number")
        stamp = m.group(1)
        expected = f"{stamp[0:4]}-{stamp[4:6]}-{stamp[6:8]}", f"{stamp[8:10]}:{stamp[10:12]}:{stamp[12:14]}"
        if (record.date, record.time) != expected:
            errors.append("date: date/time fields disagree with the file_name timestamp")
    if not DATE_RE.match(record.date):
        errors.append(f"date: {record.date!r} is not yyyy-mm-dd")
    if not TIME_RE.match(record.time):
        errors.append(f"time: {record.time!r} is not hh:mm:ss")
    if not 0.0 <= record.camera_pose.polar <= 180.0:
        errors.append("camera_pose.polar: must be in [0, 180]")
    if not -180.0 <= record.camera_pose.azimuthal <= 180.0:
        errors.append("camera_pose.azimuthal: must be in [-180, 180]")
    seen_names = set()
    for i, sub in enumerate(record.bounding_boxes):
        prefix = f"bounding_boxes[{i}]"
        if not SUBIMAGE_NAME_RE.match(sub.subimage_file_name):
            errors.append(f"{prefix}.subimage_file_name: {sub.subimage_file_name!r} "
                          "does not match the yyyymmddhhmmss<position-id> pattern")
        if sub.subimage_file_name in seen_names:
            errors.append(f"{prefix}.subimage_file_name: duplicate within record")
        seen_names.add(sub.subimage_file_name)
        if sub.position_id < 0:
            errors.append(f"{prefix}.position_id: must be >= 0")
        if not (0.0 <= sub.x_min < sub.x_max <= 1.0):
            errors.append(f"{prefix}.x_min: x range [{sub.x_min}, {sub.x_max}] invalid")
        if not (0.0 <= sub.y_min < sub.y_max <= 1.0):
            errors.append(f"{prefix}.y_min: y range [{sub.y_min}, {sub.y_max}] invalid")
    return errors


def _subimage_to_dict(sub: SubimageRecord, legacy_origin: bool) -> dict:
    x_min, x_max = sub.x_min, sub.x_max
    if legacy_origin:
        x_min, x_max = 1.0 - sub.x_max, 1.0 - sub.x_min
    return {
        "plant_id": sub.plant_id,
        "label": sub.label,
        "scientific_name": sub.scientific_name,
        "position_id": sub.position_id,
        "subimage_file_name": sub.subimage_file_name,
        "date_planted": sub.date_planted.isoformat(),
        "x_min": x_min,
        "x_max": x_max,
        "y_min": sub.y_min,
        "y_max": sub.y_max,
    }


def record_to_dict(record: MasterImageRecord, legacy_origin: bool = False) -> dict:
    return {
        "version": record.version,
        "file_name": record.file_name,
        "bb_file_name": record.bb_file_name,
        "date": record.date,
        "time": record.time,
        "room": record.room,
        "institute": record.institute,
        "camera": record.camera,
        "lens": record.lens,
        "camera_pose": {
            "x": record.camera_pose.x,
            "y": record.camera_pose.y,
            "z": record.camera_pose.z,
            "polar": record.camera_pose.polar,
            "azimuthal": record.camera_pose.azimuthal,
        },
        "bounding_boxes": [
            _subimage_to_dict(sub, legacy_origin) for sub in record.bounding_boxes
        ],
    }


def emit_metadata(record: MasterImageRecord, legacy_origin: bool = False) -> str:
    """Serialize a record to its JSON document, validating first.

    Floats are emitted at full repr precision, so parse(emit(r)) == r.
    """
    errors = validate_record(record)
    if errors:
        raise MetadataError(errors)
    return json.dumps(record_to_dict(record, legacy_origin), indent=2) + "\n"


def _validate_subimage_dict(data: dict, prefix: str, errors: list[str]) -> None:
    for name in SUBIMAGE_FIELDS:
        if name not in data:
            errors.append(f"{prefix}.{name}: missing")
    for name in data:
        if name not in SUBIMAGE_FIELDS:
            errors.append(f"{prefix}.{name}: unknown field")
    for name in ("plant_id", "label", "scientific_name", "subimage_file_name"):
        if name in data and not isinstance(data[name], str):
            errors.append(f"{prefix}.{name}: must be a string")
    if "position_id" in data and not (
        isinstance(data["position_id"], int) and not isinstance(data["position_id"], bool)
    ):
        errors.append(f"{prefix}.position_id: must be an integer")
    if isinstance(data.get("subimage_file_name"), str) and not SUBIMAGE_NAME_RE.match(
        data["subimage_file_name"]
    ):
        errors.append(
            f"{prefix}.subimage_file_name: {data['subimage_file_name']!r} does not "
            "match the yyyymmddhhmmss<position-id> pattern"
        )
    if isinstance(data.get("date_planted"), str):
        if not DATE_RE.match(data["date_planted"]):
            errors.append(f"{prefix}.date_planted: not yyyy-mm-dd")
    elif "date_planted" in data:
        errors.append(f"{prefix}.date_planted: must be a string")
    coords = {}
    for name in ("x_min", "x_max", "y_min", "y_max"):
        if name in data:
            if _is_number(data[name]):
                coords[name] = float(data[name])
            else:
                errors.append(f"{prefix}.{name}: must be a number")
    if {"x_min", "x_max"} <= coords.keys() and not (
        0.0 <= coords["x_min"] < coords["x_max"] <= 1.0
    ):
        errors.append(
            f"{prefix}.x_min: x range [{coords['x_min']}, {coords['x_max']}] invalid"
        )
    if {"y_min", "y_max"} <= coords.keys() and not (
        0.0 <= coords["y_min"] < coords["y_max"] <= 1.0
    ):
        errors.append(
            f"{prefix}.y_min: y range [{coords['y_min']}, {coords['y_max']}] invalid"
        )


def validate_document(doc: object) -> list[str]:
    """Strict schema check of a parsed JSON document; collects every error."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        return [f"document: expected a JSON object, got {type(doc).__name__}"]
    for name in TOP_LEVEL_FIELDS:
        if name not in doc:
            errors.append(f"{name}: missing")
    for name in doc:
        if name not in TOP_LEVEL_FIELDS:
            errors.append(f"{name}: unknown field")
    if "version" in doc and doc["version"] != SCHEMA_VERSION:
        errors.append(f"version: expected {SCHEMA_VERSION!r}, got {doc['version']!r}")
    for name in ("file_name", "bb_file_name", "date", "time", "room", "institute", "camera", "lens"):
        if name in doc and not isinstance(doc[name], str):
            errors.append(f"{name}: must be a string")
    file_name = doc.get("file_name")
    if isinstance(file_name, str):
        m = MASTER_NAME_RE.match(file_name)
        if not m:
            errors.append(
                f"file_name: {file_name!r} does not match the yyyymmddhhmmss-pose<N> pattern"
            )
        else:
            if isinstance(doc.get("bb_file_name"), str) and doc["bb_file_name"] != bb_file_name_for(file_name):
                errors.append("bb_file_name: must equal file_name with -bb after the pose number")
            stamp = m.group(1)
            want_date = f"{stamp[0:4]}-{stamp[4:6]}-{stamp[6:8]}"
            want_time = f"{stamp[8:10]}:{stamp[10:12]}:{stamp[12:14]}"
            if isinstance(doc.get("date"), str) and isinstance(doc.get("time"), str):
                if (doc["date"], doc["time"]) != (want_date, want_time):
                    errors.append("date: date/time fields disagree with the file_name timestamp")
    if isinstance(doc.get("date"), str) and not DATE_RE.match(doc["date"]):
        errors.append(f"date: {doc['date']!r} is not yyyy-mm-dd")
    if isinstance(doc.get("time"), str) and not TIME_RE.match(doc["time"]):
        errors.append(f"time: {doc['time']!r} is not hh:mm:ss")
    pose = doc.get("camera_pose")
    if pose is not None:
        if not isinstance(pose, dict):
            errors.append("camera_pose: must be an object")
        else:
            for name in POSE_FIELDS:
                if name not in pose:
                    errors.append(f"camera_pose.{name}: missing")
                elif not _is_number(pose[name]):
                    errors.append(f"camera_pose.{name}: must be a number")
            for name in pose:
                if name not in POSE_FIELDS:
                    errors.append(f"camera_pose.{name}: unknown field")
            if _is_number(pose.get("polar")) and not 0.0 <= pose["polar"] <= 180.0:
                errors.append("camera_pose.polar: must be in [0, 180]")
            if _is_number(pose.get("azimuthal")) and not -180.0 <= pose["azimuthal"] <= 180.0:
                errors.append("camera_pose.azimuthal: must be in [-180, 180]")
    boxes = doc.get("bounding_boxes")
    if boxes is not None:
        if not isinstance(boxes, list):
            errors.append("bounding_boxes: must be a list")
        else:
            seen = set()
            for i, item in enumerate(boxes):
                prefix = f"bounding_boxes[{i}]"
                if not isinstance(item, dict):
                    errors.append(f"{prefix}: must be an object")
                    continue
                _validate_subimage_dict(item, prefix, errors)
                name = item.get("subimage_file_name")
                if isinstance(name, str):
                    if name in seen:
                        errors.append(f"{prefix}.subimage_file_name: duplicate within record")
                    seen.add(name)
    return errors


def _record_from_document(doc: dict, legacy_origin: bool) -> MasterImageRecord:
    subs = []
    for item in doc["bounding_boxes"]:
        x_min, x_max = float(item["x_min"]), float(item["x_max"])
        if legacy_origin:
            x_min, x_max = 1.0 - x_max, 1.0 - x_min
        subs.append(
            SubimageRecord(
                plant_id=item["plant_id"],
                label=item["label"],
                scientific_name=item["scientific_name"],
                position_id=int(item["position_id"]),
                subimage_file_name=item["subimage_file_name"],
                date_planted=date.fromisoformat(item["date_planted"]),
                x_min=x_min,
                x_max=x_max,
                y_min=float(item["y_min"]),
                y_max=float(item["y_max"]),
            )
        )
    pose = doc["camera_pose"]
    return MasterImageRecord(
        version=doc["version"],
        file_name=doc["file_name"],
        bb_file_name=doc["bb_file_name"],
        date=doc["date"],
        time=doc["time"],
        room=doc["room"],
        institute=doc["institute"],
        camera=doc["camera"],
        lens=doc["lens"],
        camera_pose=MetadataPose(
            x=float(pose["x"]),
            y=float(pose["y"]),
            z=float(pose["z"]),
            polar=float(pose["polar"]),
            azimuthal=float(pose["azimuthal"]),
        ),
        bounding_boxes=tuple(subs),
    )


def parse_and_validate(
    data: bytes | str, legacy_origin: bool = False
) -> tuple[MasterImageRecord | None, list[str]]:
    """Parse a metadata document; returns (record, []) or (None, errors)."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            return None, [f"document: not valid UTF-8 ({exc})"]
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        return None, [f"document: malformed JSON ({exc})"]
    errors = validate_document(doc)
    if errors:
        return None, errors
    return _record_from_document(doc, legacy_origin), []


def box_pixel_rect(box: NormalizedBox, width: int, height: int) -> tuple[int, int, int, int]:
    """Half-open pixel rectangle (x0, x1, y0, y1) of a normalized box."""
    return (
        int(round(box.x_min * width)),
        int(round(box.x_max * width)),
        int(round(box.y_min * height)),
        int(round(box.y_max * height)),
    )


def crop(master: np.ndarray, box: NormalizedBox) -> np.ndarray:
    """Cut the box's pixel rectangle out of a master image.

    Crop sizes vary from box to box; a box that rounds to zero area raises
    CropError.
    """
    height, width = master.shape[:2]
    x0, x1, y0, y1 = box_pixel_rect(box, width, height)
    if x1 <= x0 or y1 <= y0:
        raise CropError(f"box {box} rounds to an empty rectangle on {width}x{height}")
    return master[y0:y1, x0:x1].copy()


def classify_position(
    position_id: int,
    position: Point3,
    volume: Cuboid,
    margin: float = 0.0,
) -> PositionClass:
    """Edge when the position is within ``margin`` of the footprint boundary."""
    if not volume.footprint_contains(position):
        raise ValueError(f"position {position} (id {position_id}) outside the volume footprint")
    if volume.boundary_distance_xy(position) <= margin:
        return PositionClass.EDGE
    return PositionClass.INTERIOR


def draw_boxes(
    image: np.ndarray,
    boxes: list[NormalizedBox],
    color: tuple[int, int, int] = (255, 0, 0),
    thickness: int = 3,
) -> np.ndarray:
    """Copy of the image with rectangle outlines drawn over it."""
    out = image.copy()
    height, width = out.shape[:2]
    col = np.asarray(color, dtype=out.dtype)
    for box in boxes:
        x0, x1, y0, y1 = box_pixel_rect(box, width, height)
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(width, x1), min(height, y1)
        if x1 <= x0 or y1 <= y0:
            continue
        t = thickness
        out[y0 : min(y0 + t, y1), x0:x1] = col
        out[max(y1 - t, y0) : y1, x0:x1] = col
        out[y0:y1, x0 : min(x0 + t, x1)] = col
        out[y0:y1, max(x1 - t, x0) : x1] = col
    return out


@dataclass
class RunSummary:
    out_dir: Path
    n_masters: int
    n_subimages: int
    master_files: list[str] = field(default_factory=list)
    metadata_files: list[str] = field(default_factory=list)
    subimage_files: list[str] = field(default_factory=list)


def record_for_capture(
    capture: Capture,
    *,
    room: str,
    institute: str,
    camera_name: str,
    lens: str,
    filename_ext: str = "png",
) -> MasterImageRecord:
    """Build the metadata record for one capture of a simulated run."""
    file_name = master_file_name(capture.captured_at, capture.pose_number, filename_ext)
    subs = tuple(
        SubimageRecord(
            plant_id=plant.plant_id,
            label=plant.label,
            scientific_name=plant.scientific_name,
            position_id=plant.position_id,
            subimage_file_name=subimage_file_name(
                capture.captured_at, plant.position_id, filename_ext
            ),
            date_planted=plant.date_planted,
            x_min=box.x_min,
            x_max=box.x_max,
            y_min=box.y_min,
            y_max=box.y_max,
        )
        for plant, box in capture.boxes
    )
    return MasterImageRecord(
        file_name=file_name,
        bb_file_name=bb_file_name_for(file_name),
        date=capture.captured_at.strftime("%Y-%m-%d"),
        time=capture.captured_at.strftime("%H:%M:%S"),
        room=room,
        institute=institute,
        camera=camera_name,
        lens=lens,
        camera_pose=MetadataPose.from_camera_pose(capture.pose),
        bounding_boxes=subs,
    )


def write_run(
    run: SimulationRun,
    scene: Scene,
    out_dir: str | Path,
    *,
    volume: Cuboid,
    room: str = "room-a",
    institute: str = "desk-lab",
    camera_name: str = "simcam",
    lens: str = "rectilinear-98.7deg",
    legacy_origin: bool = False,
    filename_ext: str = "png",
    edge_margin: float = 0.0,
) -> RunSummary:
    """Write a complete run directory for a simulated run.

    Every image is written as lossless PNG data regardless of the name
    extension; ``filename_ext='jpg'`` only emulates the legacy naming. All
    writes are atomic (temp file + rename).
    """
    out_dir = Path(out_dir)
    masters_dir = out_dir / "masters"
    metadata_dir = out_dir / "metadata"
    summary = RunSummary(out_dir=out_dir, n_masters=0, n_subimages=0)
    written_subimages: set[str] = set()

    for capture in run.captures:
        record = record_for_capture(
            capture,
            room=room,
            institute=institute,
            camera_name=camera_name,
            lens=lens,
            filename_ext=filename_ext,
        )
        ioutil.write_png(masters_dir / record.file_name, capture.image)
        overlay = draw_boxes(capture.image, [box for _, box in capture.boxes])
        ioutil.write_png(masters_dir / record.bb_file_name, overlay)
        summary.master_files.append(record.file_name)

        for (plant, box), sub in zip(capture.boxes, record.bounding_boxes):
            if sub.subimage_file_name in written_subimages:
                raise ValueError(
                    f"subimage name collision: {sub.subimage_file_name} "
                    "(captures less than a second apart share a position id)"
                )
            written_subimages.add(sub.subimage_file_name)
            position_class = classify_position(
                plant.position_id, plant.position, volume, edge_margin
            )
            rel = Path("subimages") / position_class.value / sub.subimage_file_name
            ioutil.write_png(out_dir / rel, crop(capture.image, box))
            summary.subimage_files.append(str(rel))

        meta_name = record.file_name.rsplit(".", 1)[0] + ".json"
        ioutil.write_text(metadata_dir / meta_name, emit_metadata(record, legacy_origin))
        summary.metadata_files.append(meta_name)

    summary.n_masters = len(summary.master_files)
    summary.n_subimages = len(summary.subimage_files)
    log_doc = run.log.to_json_dict()
    log_doc["n_masters"] = summary.n_masters
    log_doc["n_subimages"] = summary.n_subimages
    log_doc["legacy_origin"] = legacy_origin
    ioutil.write_json(out_dir / "run_log.json", log_doc)
    return summary


def validate_run_directory(path: str | Path, legacy_origin: bool = False) -> list[str]:
    """Validate every metadata document under a run directory (or a bare
    metadata directory) and, when the run layout is present, cross-check
    that referenced files exist and no image files are orphaned."""
    path = Path(path)
    if (path / "metadata").is_dir():
        run_root, metadata_dir = path, path / "metadata"
    else:
        run_root, metadata_dir = None, path
    if not metadata_dir.is_dir():
        return [f"{path}: no metadata directory found"]

    errors: list[str] = []
    referenced_masters: set[str] = set()
    referenced_subimages: dict[str, str] = {}
    for meta_path in sorted(metadata_dir.glob("*.json")):
        record, doc_errors = parse_and_validate(meta_path.read_bytes(), legacy_origin)
        errors.extend(f"{meta_path.name}: {e}" for e in doc_errors)
        if record is None:
            continue
        referenced_masters.add(record.file_name)
        referenced_masters.add(record.bb_file_name)
        for sub in record.bounding_boxes:
            if sub.subimage_file_name in referenced_subimages:
                errors.append(
                    f"{meta_path.name}: subimage_file_name {sub.subimage_file_name!r} "
                    f"already referenced by {referenced_subimages[sub.subimage_file_name]}"
                )
            else:
                referenced_subimages[sub.subimage_file_name] = meta_path.name

    if run_root is None:
        return errors

    masters_dir = run_root / "masters"
    on_disk_masters = (
        {p.name for p in masters_dir.iterdir() if p.is_file()}
        if masters_dir.is_dir()
        else set()
    )
    for name in sorted(referenced_masters - on_disk_masters):
        errors.append(f"masters/{name}: referenced by metadata but missing on disk")
    for name in sorted(on_disk_masters - referenced_masters):
        errors.append(f"masters/{name}: on disk but not referenced by any metadata")

    subimages_dir = run_root / "subimages"
    on_disk_subs = (
        {p.name for p in subimages_dir.rglob("*") if p.is_file()}
        if subimages_dir.is_dir()
        else set()
    )
    for name in sorted(set(referenced_subimages) - on_disk_subs):
        errors.append(f"subimages/{name}: referenced by metadata but missing on disk")
    for name in sorted(on_disk_subs - set(referenced_subimages)):
        errors.append(f"subimages/{name}: on disk but not referenced by any metadata")
    return errors
