"""Atomic file output helpers; interrupted runs never leave partial files."""

import json
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bytes(path: str | Path, data: bytes) -> None:
    _atomic_write(Path(path), data)


def write_text(path: str | Path, text: str) -> None:
    _atomic_write(Path(path), text.encode("utf-8"))


def write_json(path: str | Path, doc: object) -> None:
    write_text(path, json.dumps(doc, indent=2) + "\n")


def write_png(path: str | Path, array: np.ndarray) -> None:
    """Write an image array as PNG regardless of the path's extension."""
    import io

    arr = np.asarray(array)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    _atomic_write(Path(path), buf.getvalue())


def read_image(path: str | Path) -> np.ndarray:
    """Load an image file as an (h, w, 3) uint8 RGB array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))
