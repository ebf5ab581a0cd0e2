"""Turn raw intensity frames into per-slice line-integral sinograms.

The chain is: estimate the unattenuated beam level, rectify each frame so the
rotation axis lands on the central detector column with zero roll, invert
Beer-Lambert to line integrals, then gather row z across angles into the
sinogram of slice z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projection import Geometry, IntensityFrame, Sinogram
from .raster import grid_center, resample_rotate_translate

INTENSITY_FLOOR = 1e-6  # fraction of i0 below which measurements are clamped
MAX_TILT = np.pi / 8


@dataclass
class ProjectionStack:
    """Ordered intensity frames, one per angle, sharing geometry and beam level."""

    frames: list
    geometry: Geometry
    i0_estimate: float

    def __post_init__(self):
        self.geometry.validate()
        if len(self.frames) != self.geometry.num_angles:
            raise ValueError("frame count does not match num_angles")
        shapes = {f.data.shape for f in self.frames}
        if len(shapes) > 1:
            raise ValueError(f"frames disagree on shape: {shapes}")

    @property
    def frame_shape(self):
        return self.frames[0].data.shape


def estimate_i0(frames) -> float:
    """Beam level from the data: high percentile over all frame pixels.

    Air pixels (rays missing the object) dominate the top of the histogram,
    so the 99.5th percentile is robust to noise outliers without needing an
    explicit air mask.  Accepts a ProjectionStack or a list of frames.
    """
    if isinstance(frames, ProjectionStack):
        frames = frames.frames
    values = np.stack([f.data for f in frames])
    i0 = float(np.percentile(values, 99.5))
    if i0 <= 0:
        raise ValueError("estimated beam level is not positive")
    return i0


def to_line_integral(frame, i0: float) -> np.ndarray:
    """Invert Beer-Lambert: p = -ln(I / i0), clamped to finite nonnegative.

    Intensities below ``INTENSITY_FLOOR * i0`` are clamped before the log so
    dead pixels cannot produce infinities; noise overshoot above i0 maps to
    p = 0.  Accepts an IntensityFrame or a bare matrix.
    """
    if i0 <= 0:
        raise ValueError("i0 must be positive")
    if isinstance(frame, IntensityFrame):
        frame = frame.data
    intensity = np.asarray(frame, dtype=np.float64)
    p = -np.log(np.maximum(intensity, INTENSITY_FLOOR * i0) / i0)
    return np.maximum(p, 0.0)


@dataclass
class RectifyParams:
    """Axis column, camera roll to undo, and the output crop window.

    ``crop`` is (row_start, row_stop, col_start, col_stop) in frame pixels,
    or None for the whole frame.
    """

    center_column: float
    tilt: float = 0.0
    crop: tuple[int, int, int, int] | None = None

    def validate(self, frame_shape: tuple[int, int] | None = None) -> None:
        if not np.isfinite(self.center_column) or not np.isfinite(self.tilt):
            raise ValueError("center_column and tilt must be finite")
        if abs(self.tilt) >= MAX_TILT:
            raise ValueError(f"|tilt| must be below {MAX_TILT:.4f} rad")
        if self.crop is not None:
            r0, r1, c0, c1 = self.crop
            if not (r0 < r1 and c0 < c1):
                raise ValueError("crop bounds must be nonempty")
            if frame_shape is not None:
                h, w = frame_shape
                if not (0 <= r0 and r1 <= h and 0 <= c0 and c1 <= w):
                    raise ValueError(f"crop {self.crop} outside frame {frame_shape}")

    @staticmethod
    def identity(frame_width: int) -> "RectifyParams":
        return RectifyParams(center_column=grid_center(frame_width), tilt=0.0)


def rectify(frame, params: RectifyParams):
    """Undo camera roll and axis offset in one resampling pass, then crop.

    Rotates by ``-tilt`` about (frame row center, center_column) and shifts
    columns so center_column lands on the frame's central column; the crop
    window is applied last.  Identity parameters reproduce the frame exactly.
    An IntensityFrame is filled with i0 (air) outside its bounds and returned
    as an IntensityFrame; a bare matrix is filled with 0 and returned bare.
    """
    if isinstance(frame, IntensityFrame):
        arr, fill = frame.data, frame.i0
    else:
        arr, fill = np.asarray(frame, dtype=np.float64), 0.0
        frame = None
    if arr.ndim != 2:
        raise ValueError("frame must be 2-D")
    params.validate(arr.shape)
    pivot = (grid_center(arr.shape[0]), params.center_column)
    shift = grid_center(arr.shape[1]) - params.center_column
    out = resample_rotate_translate(arr, pivot, -params.tilt, shift, fill=fill)
    if params.crop is not None:
        r0, r1, c0, c1 = params.crop
        out = out[r0:r1, c0:c1]
    if frame is not None:
        return IntensityFrame(data=out, i0=frame.i0)
    return out


def rectified_line_integrals(stack: ProjectionStack,
                             params: RectifyParams | None = None) -> np.ndarray:
    """All frames rectified then converted to line integrals, as one array.

    Shape (num_angles, frame_height, num_detectors).  Rectification happens on
    intensities (air fill = i0, which the log maps to 0), conversion after.
    """
    if params is None:
        params = RectifyParams.identity(stack.frame_shape[1])
    i0 = stack.i0_estimate
    return np.stack([to_line_integral(rectify(f, params), i0)
                     for f in stack.frames])


def extract_slice_sinogram(stack: ProjectionStack, z: int,
                           params: RectifyParams | None = None) -> Sinogram:
    """Sinogram of axial slice z: row i is row z of the rectified frame i.

    With ``params`` None the frames are assumed already centered (identity
    rectification).  The output geometry has center_offset forced to zero
    because rectification has moved the axis onto the central column.
    """
    height = stack.frame_shape[0]
    if not 0 <= z < height:
        raise IndexError(f"slice index {z} outside frame of height {height}")
    if params is None:
        params = RectifyParams.identity(stack.frame_shape[1])
    i0 = stack.i0_estimate
    rows = [to_line_integral(rectify(f, params).data[z], i0)
            for f in stack.frames]
    return Sinogram(data=np.stack(rows), geometry=centered_geometry(stack.geometry))


def centered_geometry(geometry: Geometry) -> Geometry:
    """The same schedule with the axis on the central column (offset zero)."""
    return Geometry(num_angles=geometry.num_angles,
                    angle_range=geometry.angle_range,
                    num_detectors=geometry.num_detectors,
                    detector_spacing=geometry.detector_spacing,
                    center_offset=0.0)


def sinogram_from_rows(line_integrals: np.ndarray, z: int,
                       geometry: Geometry) -> Sinogram:
    """Slice z's sinogram out of a precomputed rectified line-integral array."""
    return Sinogram(data=np.ascontiguousarray(line_integrals[:, z, :]),
                    geometry=centered_geometry(geometry))
