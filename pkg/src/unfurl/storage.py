"""Artifact persistence: raw float arrays, frame stacks, and JSON documents.

Arrays persist as raw little-endian float32 (``.f32``) next to a JSON sidecar
carrying shape, axis order, value statistics, and caller metadata; the format
is readable from any language and round-trips bit-exactly.  Frame stacks are
one 16-bit grayscale PNG per angle plus one metadata file, mirroring a
camera-shot-per-angle acquisition.  Everything else (calibration, control
points, paths, manifests) is plain JSON.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .calibration import AxisCalibration
from .errors import SpecError
from .preprocess import ProjectionStack
from .projection import Geometry, IntensityFrame
from .segmentation import ControlPoints, SpiralPath
from .unwrap import UnwrappedSheet


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


# -- raw float arrays ---------------------------------------------------------

def save_array(path, array: np.ndarray, meta: dict | None = None) -> None:
    """Write ``array`` as little-endian float32 plus a ``.json`` sidecar."""
    path = Path(path)
    array = np.asarray(array)
    data = np.ascontiguousarray(array, dtype="<f4")
    path.write_bytes(data.tobytes())
    sidecar = {
        "dtype": "float32le",
        "shape": list(array.shape),
        "axis_order": "slowest-to-fastest (z-major, then row-major)",
        "stats": {"min": float(data.min()) if data.size else 0.0,
                  "max": float(data.max()) if data.size else 0.0,
                  "mean": float(data.mean()) if data.size else 0.0},
    }
    sidecar.update(meta or {})
    write_json(path.with_suffix(path.suffix + ".json"), sidecar)


def load_array(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = read_json(path.with_suffix(path.suffix + ".json"))
    if meta.get("dtype") != "float32le":
        raise SpecError(f"unsupported array dtype {meta.get('dtype')!r}")
    data = np.frombuffer(path.read_bytes(), dtype="<f4")
    array = data.reshape(meta["shape"]).astype(np.float64)
    return array, meta


# -- geometry -----------------------------------------------------------------

def geometry_to_dict(geometry: Geometry) -> dict:
    return {"num_angles": geometry.num_angles,
            "angle_range": geometry.angle_range,
            "num_detectors": geometry.num_detectors,
            "detector_spacing": geometry.detector_spacing,
            "center_offset": geometry.center_offset}


def geometry_from_dict(d: dict) -> Geometry:
    return Geometry(num_angles=int(d["num_angles"]),
                    angle_range=float(d["angle_range"]),
                    num_detectors=int(d["num_detectors"]),
                    detector_spacing=float(d["detector_spacing"]),
                    center_offset=float(d["center_offset"]))


# -- frame stacks -------------------------------------------------------------

PNG_MAX = 65535


def save_frames(directory, frames: list[IntensityFrame], geometry: Geometry,
                i0: float, extra_meta: dict | None = None) -> None:
    """One 16-bit grayscale PNG per angle plus ``meta.json``.

    Pixel value = round(intensity / i0 * 65535); i0 and the scale live in the
    metadata so loads invert exactly the same way.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        scaled = np.rint(frame.data / i0 * PNG_MAX)
        arr = np.clip(scaled, 0, PNG_MAX).astype(np.uint16)
        Image.fromarray(arr).save(directory / f"frame_{i:04d}.png")
    meta = {"format": "frame-stack-v1",
            "num_frames": len(frames),
            "frame_shape": list(frames[0].data.shape),
            "i0": i0,
            "intensity_scale": PNG_MAX,
            "geometry": geometry_to_dict(geometry)}
    meta.update(extra_meta or {})
    write_json(directory / "meta.json", meta)


def load_frames(directory) -> ProjectionStack:
    """Load a frame-stack directory back into a ProjectionStack.

    The stack's i0_estimate is the recorded acquisition i0; callers wanting a
    data-driven estimate can re-run estimate_i0 on the frames.
    """
    directory = Path(directory)
    meta = read_json(directory / "meta.json")
    geometry = geometry_from_dict(meta["geometry"])
    i0 = float(meta["i0"])
    frames = []
    for i in range(int(meta["num_frames"])):
        img = Image.open(directory / f"frame_{i:04d}.png")
        arr = np.asarray(img, dtype=np.float64) / meta["intensity_scale"] * i0
        # PNG stores clipped nonnegative values; restore the clamp floor
        frames.append(IntensityFrame(data=np.maximum(arr, i0 * 1e-12), i0=i0))
    return ProjectionStack(frames=frames, geometry=geometry, i0_estimate=i0)


# -- 16-bit display exports ---------------------------------------------------

def save_image_png16(path, image: np.ndarray) -> dict:
    """Export a float image as 16-bit grayscale, normalized to its own range.

    Returns the normalization record (min/max) for the caller's sidecar.
    """
    image = np.asarray(image, dtype=np.float64)
    lo, hi = float(image.min()), float(image.max())
    span = hi - lo if hi > lo else 1.0
    arr = np.rint((image - lo) / span * PNG_MAX).astype(np.uint16)
    Image.fromarray(arr).save(path)
    return {"value_min": lo, "value_max": hi, "scale": PNG_MAX}


# -- calibration --------------------------------------------------------------

def save_calibration(path, calibration: AxisCalibration) -> None:
    write_json(path, {"format": "axis-calibration-v1",
                      "center_column": calibration.center_column,
                      "tilt": calibration.tilt,
                      "residual": calibration.residual,
                      "pair_index": calibration.pair_index,
                      "rectify_order": "rotate-then-crop"})


def load_calibration(path) -> AxisCalibration:
    d = read_json(path)
    cal = AxisCalibration(center_column=float(d["center_column"]),
                          tilt=float(d["tilt"]),
                          residual=float(d["residual"]),
                          pair_index=int(d["pair_index"]))
    cal.validate()
    return cal


# -- control points and paths -------------------------------------------------

def save_control_points(path, control: ControlPoints) -> None:
    write_json(path, {"format": "control-points-v1",
                      "closed": control.closed,
                      "points": control.points.tolist()})


def load_control_points(path) -> ControlPoints:
    d = read_json(path)
    return ControlPoints(points=np.asarray(d["points"], dtype=np.float64),
                         closed=bool(d.get("closed", False)))


def save_path(path, spath: SpiralPath) -> None:
    write_json(path, {"format": "spiral-path-v1",
                      "control": {"closed": spath.control.closed,
                                  "points": spath.control.points.tolist()},
                      "smoothing": spath.smoothing,
                      "spacing": spath.spacing,
                      "arc_length": spath.arc_length,
                      "samples": spath.samples.tolist()})


def load_path(path) -> SpiralPath:
    d = read_json(path)
    control = ControlPoints(points=np.asarray(d["control"]["points"],
                                              dtype=np.float64),
                            closed=bool(d["control"].get("closed", False)))
    return SpiralPath(control=control,
                      smoothing=float(d["smoothing"]),
                      samples=np.asarray(d["samples"], dtype=np.float64),
                      arc_length=float(d["arc_length"]),
                      spacing=float(d["spacing"]))


# -- unwrapped sheets ---------------------------------------------------------

def save_sheet(stem, sheet: UnwrappedSheet,
               display_percentiles: tuple[float, float] = (1.0, 99.0)) -> None:
    """Write the sheet values (lossless) plus a 16-bit PNG display export.

    ``stem`` is a path without extension; writes stem.f32, stem.f32.json,
    and stem.png.
    """
    stem = Path(stem)
    raw = stem.with_suffix(".f32")
    norm = save_image_png16(stem.with_suffix(".png"), sheet.image)
    save_array(raw, sheet.image, meta={
        "kind": "unwrapped-sheet",
        "band_halfwidth": sheet.band_halfwidth,
        "provenance": sheet.provenance,
        "display": {"png": stem.with_suffix(".png").name,
                    "percentiles": list(display_percentiles), **norm},
    })


def load_sheet(stem) -> UnwrappedSheet:
    stem = Path(stem)
    image, meta = load_array(stem.with_suffix(".f32"))
    return UnwrappedSheet(image=image,
                          band_halfwidth=float(meta["band_halfwidth"]),
                          provenance=dict(meta["provenance"]))
