"""Forward model: Radon transform of slices and simulated detector intensities.

Lines are parametrized by signed detector coordinate s and angle theta via
s = x cos(theta) + y sin(theta) about the rotation center.  A misaligned
rotation axis is modeled by ``Geometry.center_offset``: the axis sits at
detector coordinate ``center_offset`` instead of 0, exactly as a motor axis
that misses the detector's central column does.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .phantom import PhantomSpec, TextTexture, rasterize_slice
from .raster import bilinear_sample_stack, grid_center, resample_rotate_translate


@dataclass
class Geometry:
    """Parallel-beam acquisition geometry.

    Defaults follow the desk experiment: 800 projections over a full turn.
    """

    num_angles: int = 800
    angle_range: float = 2.0 * np.pi
    num_detectors: int = 256
    detector_spacing: float = 1.0
    center_offset: float = 0.0

    def validate(self) -> None:
        if self.num_angles < 1 or self.num_detectors < 1:
            raise ValueError("num_angles and num_detectors must be >= 1")
        if self.detector_spacing <= 0:
            raise ValueError("detector_spacing must be > 0")
        if self.angle_range <= 0:
            raise ValueError("angle_range must be > 0")

    def angles(self) -> np.ndarray:
        return np.arange(self.num_angles) * (self.angle_range / self.num_angles)

    def detector_coords(self) -> np.ndarray:
        j = np.arange(self.num_detectors, dtype=np.float64)
        return (j - (self.num_detectors - 1) / 2.0) * self.detector_spacing


@dataclass
class Sinogram:
    """Projection data p(s, theta), row per angle, column per detector bin."""

    data: np.ndarray
    geometry: Geometry

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (self.geometry.num_angles, self.geometry.num_detectors):
            raise ValueError(
                f"sinogram shape {self.data.shape} does not match geometry "
                f"({self.geometry.num_angles}, {self.geometry.num_detectors})")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("sinogram contains non-finite values")


@dataclass
class IntensityFrame:
    """One simulated camera image: rows are axial slices, columns detectors."""

    data: np.ndarray
    i0: float

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.i0 <= 0:
            raise ValueError("i0 must be positive")

    def validate(self) -> None:
        """Check the post-clamp range invariant 0 < data <= i0."""
        if not (np.all(self.data > 0) and np.all(self.data <= self.i0)):
            raise ValueError("intensities must lie in (0, i0]")


# pixels along each ray; with bilinear interpolation the quadrature error at
# step 1.0 is already an order below the rasterization error of smooth-edged
# phantoms (disk-chord check), so finer steps buy nothing
QUADRATURE_STEP = 1.0


def radon_stack(slice_imgs: np.ndarray, geometry: Geometry,
                angles: np.ndarray | None = None,
                max_workers: int | None = None) -> np.ndarray:
    """Projection rows of a stack of square slices, shape (slice, angle, detector).

    Each ray is sampled at ``QUADRATURE_STEP`` pixel intervals with bilinear
    interpolation and summed; the detector coordinate of the rotation axis is
    ``geometry.center_offset``.  Sampling positions are shared across slices,
    and angles are processed in parallel threads (each angle writes its own
    output rows, so results do not depend on scheduling).
    """
    slice_imgs = np.asarray(slice_imgs, dtype=np.float64)
    if slice_imgs.ndim != 3 or slice_imgs.shape[1] != slice_imgs.shape[2]:
        raise ValueError(f"need a stack of square slices, got {slice_imgs.shape}")
    if angles is None:
        angles = geometry.angles()

    n = slice_imgs.shape[1]
    c = grid_center(n)
    # symmetric quadrature grid: t -> -t maps the grid onto itself exactly, so
    # a ray and its reverse sample identical points and opposite projections
    # mirror to float rounding (the axis-differencing signal bottoms out at
    # ~1e-15 instead of quadrature phase error)
    half_steps = int(np.ceil((n / np.sqrt(2.0) + 1.0) / QUADRATURE_STEP))
    t = np.arange(-half_steps, half_steps + 1) * QUADRATURE_STEP
    s = geometry.detector_coords() - geometry.center_offset

    out = np.empty((slice_imgs.shape[0], len(angles), geometry.num_detectors))

    def run(i: int) -> None:
        # full turns alias exactly: remainder() is the identity on [0, 2pi)
        # and maps schedule multiples of 2pi to bit-identical representatives
        theta = np.remainder(angles[i], 2.0 * np.pi)
        ct, st = np.cos(theta), np.sin(theta)
        # ray point = s * (cos, sin) + t * (-sin, cos), then to array indices
        x = s[:, None] * ct - t[None, :] * st + c
        y = s[:, None] * st + t[None, :] * ct + c
        vals = bilinear_sample_stack(slice_imgs, y, x, fill=0.0)
        out[:, i, :] = vals.sum(axis=2) * QUADRATURE_STEP

    if max_workers is None:
        max_workers = min(8, os.cpu_count() or 1)
    if max_workers > 1 and len(angles) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            list(pool.map(run, range(len(angles))))
    else:
        for i in range(len(angles)):
            run(i)
    return out


def radon_at_angles(slice_img: np.ndarray, geometry: Geometry,
                    angles: np.ndarray) -> np.ndarray:
    """Projection rows of one square slice at explicitly given angles."""
    slice_img = np.asarray(slice_img, dtype=np.float64)
    if slice_img.ndim != 2:
        raise ValueError(f"slice must be 2-D, got {slice_img.shape}")
    return radon_stack(slice_img[None], geometry, angles)[0]


def radon(slice_img: np.ndarray, geometry: Geometry) -> Sinogram:
    """Discrete Radon transform over the geometry's full angle schedule."""
    geometry.validate()
    data = radon_at_angles(slice_img, geometry, geometry.angles())
    return Sinogram(data=data, geometry=geometry)


def _noise_generator(seed: int, angle_index: int) -> np.random.Generator:
    # counter-based stream keyed by angle so any parallel schedule over angles
    # reproduces the same draws
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, angle_index]))


def _noise_and_clamp(intensity: np.ndarray, i0: float, noise_sd: float,
                     seed: int, angle_index: int) -> np.ndarray:
    if noise_sd > 0:
        rng = _noise_generator(seed, angle_index)
        intensity = intensity + rng.normal(0.0, noise_sd * i0,
                                           size=intensity.shape)
    return np.clip(intensity, i0 * 1e-12, i0)


def attenuate(sino: Sinogram, i0: float, noise_sd: float,
              seed: int = 0) -> list[IntensityFrame]:
    """Beer-Lambert intensities I = i0 exp(-p), one single-row frame per angle.

    Optional zero-mean Gaussian noise with standard deviation ``noise_sd * i0``
    is added per pixel; the result is clamped to (0, i0].  Noise streams are
    keyed by angle index so any evaluation order reproduces the same frames.
    """
    if i0 <= 0:
        raise ValueError("i0 must be positive")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    frames = []
    for i in range(sino.geometry.num_angles):
        clean = i0 * np.exp(-sino.data[i: i + 1])
        frames.append(IntensityFrame(
            data=_noise_and_clamp(clean, i0, noise_sd, seed, i), i0=i0))
    return frames


def inject_camera_tilt(frame: np.ndarray, tilt: float, axis_column: float,
                       fill: float) -> np.ndarray:
    """Rotate an acquired frame by ``tilt`` about (row center, axis column).

    This is the generative counterpart of rectification: rectifying with the
    true axis column and tilt undoes it exactly (up to interpolation).
    """
    if tilt == 0.0:
        return frame
    pivot = (grid_center(frame.shape[0]), axis_column)
    return resample_rotate_translate(frame, pivot, tilt, 0.0, fill=fill)


def acquire_volume(spec: PhantomSpec, texture: TextTexture, geometry: Geometry,
                   i0: float, noise_sd: float, seed: int = 0,
                   camera_tilt: float = 0.0) -> list[IntensityFrame]:
    """Simulate the full acquisition: one intensity frame per angle.

    Frame ``i`` holds, in row ``z``, the attenuated projection of slice ``z``
    at angle ``theta_i``.  Identical texture rows share one Radon transform.
    Deterministic for a fixed ``seed``.
    """
    spec.validate()
    geometry.validate()
    if i0 <= 0:
        raise ValueError("i0 must be positive")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")

    rows = [tuple(texture.pixels[z]) for z in range(spec.sheet_height_px)]
    unique: dict[tuple, int] = {}
    row_of_z = np.empty(spec.sheet_height_px, dtype=np.intp)
    imgs = []
    for z, key in enumerate(rows):
        if key not in unique:
            unique[key] = len(imgs)
            imgs.append(rasterize_slice(spec, texture, z))
        row_of_z[z] = unique[key]
    sinos = radon_stack(np.asarray(imgs), geometry)  # (n_unique, angles, detectors)

    axis_col = (geometry.num_detectors - 1) / 2.0 \
        + geometry.center_offset / geometry.detector_spacing
    frames = []
    for i in range(geometry.num_angles):
        img = sinos[row_of_z, i, :]  # (z, detectors)
        # tilt is geometric (camera mount), noise is per-pixel at the sensor,
        # so the clean image is rotated first and noised after
        intensity = i0 * np.exp(-img)
        intensity = inject_camera_tilt(intensity, camera_tilt, axis_col, fill=i0)
        intensity = _noise_and_clamp(intensity, i0, noise_sd, seed, i)
        frames.append(IntensityFrame(data=intensity, i0=i0))
    return frames
