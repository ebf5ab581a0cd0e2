"""Filtered back-projection reconstruction of slice sinograms.

Frequencies are ordinary (cycles per unit length) throughout, matching the
FFT convention with 2*pi in the exponent.  With that convention the ramp
filter is H(nu) = |nu|, and the discrete reconstruction scale works out to
pi / angle_range: the plain integral over [0, pi), halved over a full turn
because every line is measured twice.  The constant is pinned by the unit
disk oracle test (a unit-density disk reconstructs to density 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError
from .projection import Geometry, Sinogram, radon_at_angles
from .raster import grid_center

IMAG_RESIDUE_TOL = 1e-9  # fraction of row norm a real filter may leave complex
FILTER_KINDS = ("ramp", "ram_lak", "none")


@dataclass
class FilterSpec:
    """Frequency response choice: full ramp, band-limited ramp, or identity.

    ``cutoff`` applies to ram_lak only, as a fraction of the Nyquist
    frequency.
    """

    kind: str = "ram_lak"
    cutoff: float = 1.0

    def validate(self) -> None:
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if not 0.0 < self.cutoff <= 1.0:
            raise ValueError("cutoff must be in (0, 1]")


def filter_response(freqs: np.ndarray, spec: FilterSpec,
                    detector_spacing: float = 1.0) -> np.ndarray:
    """H(nu) per filter kind; ram_lak zeroes |nu| above cutoff * Nyquist."""
    spec.validate()
    if detector_spacing <= 0:
        raise ValueError("detector_spacing must be > 0")
    freqs = np.asarray(freqs, dtype=np.float64)
    if spec.kind == "none":
        return np.ones_like(freqs)
    response = np.abs(freqs)
    if spec.kind == "ram_lak":
        nyquist = 0.5 / detector_spacing
        response[response > spec.cutoff * nyquist] = 0.0
    return response


def _pad_length(n: int) -> int:
    # at least twice the next power of two above n
    p = 1
    while p <= n:
        p *= 2
    return 2 * p


def apply_filter(sino: Sinogram, spec: FilterSpec | None = None) -> Sinogram:
    """Convolve every projection with the filter kernel via zero-padded FFT.

    Rows are zero-padded so the circular convolution matches the linear one.
    A real, even response must keep rows real; a row whose imaginary residue
    exceeds ``IMAG_RESIDUE_TOL`` of its norm means the response was built
    wrong and is rejected.
    """
    spec = spec or FilterSpec()
    spec.validate()
    n = sino.geometry.num_detectors
    npad = _pad_length(n)
    spectrum = np.fft.fft(sino.data, n=npad, axis=1)
    h = filter_response(np.fft.fftfreq(npad, d=sino.geometry.detector_spacing),
                        spec, sino.geometry.detector_spacing)
    filtered = np.fft.ifft(spectrum * h[None, :], axis=1)[:, :n]
    row_norm = np.linalg.norm(filtered.real, axis=1)
    bad = np.linalg.norm(filtered.imag, axis=1) > \
        IMAG_RESIDUE_TOL * np.maximum(row_norm, 1e-300)
    if np.any(bad):
        raise ConsistencyError(
            f"imaginary residue above {IMAG_RESIDUE_TOL} of row norm in "
            f"{int(bad.sum())} rows; filter response is not even/symmetric")
    return Sinogram(data=filtered.real, geometry=sino.geometry)


def back_project(sino: Sinogram, grid_size: int) -> np.ndarray:
    """Smear each projection back across the grid, weighted by the angle step.

    A point (x, y) reads the detector at s = x cos(theta) + y sin(theta) plus
    the axis offset, with linear interpolation between bins and zero outside
    the detector.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    geo = sino.geometry
    c = grid_center(grid_size)
    coords = np.arange(grid_size, dtype=np.float64) - c
    yy = coords[:, None]  # row index increases with y
    xx = coords[None, :]
    det = geo.detector_coords()
    out = np.zeros((grid_size, grid_size))
    for i, theta in enumerate(geo.angles()):
        s = xx * np.cos(theta) + yy * np.sin(theta) + geo.center_offset
        out += np.interp(s.ravel(), det, sino.data[i],
                         left=0.0, right=0.0).reshape(grid_size, grid_size)
    return out * (geo.angle_range / geo.num_angles)


@dataclass
class MaskSpec:
    """Annular support mask in pixel units about the grid center."""

    inner_radius: float
    outer_radius: float

    def validate(self) -> None:
        if self.inner_radius < 0 or self.outer_radius <= self.inner_radius:
            raise ValueError("need 0 <= inner_radius < outer_radius")


@dataclass
class ReconSlice:
    """One reconstructed slice plus the settings that produced it."""

    image: np.ndarray
    geometry: Geometry
    filter_spec: FilterSpec
    mask: MaskSpec | None = None
    z: int | None = None


def _mask_weights(shape: tuple[int, int], mask: MaskSpec) -> np.ndarray:
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
    r = np.hypot(xx - grid_center(shape[1]), yy - grid_center(shape[0]))
    return ((r >= mask.inner_radius) & (r <= mask.outer_radius)).astype(np.float64)


def apply_mask(recon, mask: MaskSpec):
    """Zero everything outside the annulus (hard edge, hence idempotent).

    Accepts a ReconSlice (returns a ReconSlice recording the mask) or a bare
    image.  The background level is 0 by convention: air reconstructs to ~0.
    """
    mask.validate()
    image = recon.image if isinstance(recon, ReconSlice) else \
        np.asarray(recon, dtype=np.float64)
    half = min(image.shape) / 2.0
    if mask.outer_radius > half and not np.isinf(mask.outer_radius):
        raise ValueError(f"outer_radius {mask.outer_radius} exceeds half the "
                         f"grid ({half})")
    masked = image * _mask_weights(image.shape, mask)
    if isinstance(recon, ReconSlice):
        return ReconSlice(image=masked, geometry=recon.geometry,
                          filter_spec=recon.filter_spec, mask=mask, z=recon.z)
    return masked


def fbp(sino: Sinogram, grid_size: int, filter_spec: FilterSpec | None = None,
        mask: MaskSpec | None = None, z: int | None = None) -> ReconSlice:
    """Filtered back-projection: filter, smear, scale by pi / angle_range."""
    if sino.geometry.angle_range < np.pi - 1e-9:
        raise ValueError("reconstruction needs angle coverage of at least pi")
    filter_spec = filter_spec or FilterSpec()
    filtered = apply_filter(sino, filter_spec)
    image = back_project(filtered, grid_size)
    image *= np.pi / sino.geometry.angle_range
    out = ReconSlice(image=image, geometry=sino.geometry,
                     filter_spec=filter_spec, mask=None, z=z)
    if mask is not None:
        out = apply_mask(out, mask)
    return out


def detect_extent_radius(image: np.ndarray, threshold_fraction: float = 0.5) -> float:
    """Largest radius whose pixel exceeds the threshold fraction of the max.

    Used to derive a default outer mask radius (1.05x this value) when none
    is configured.
    """
    image = np.asarray(image, dtype=np.float64)
    peak = image.max()
    if peak <= 0:
        return 0.0
    yy, xx = np.mgrid[0:image.shape[0], 0:image.shape[1]].astype(np.float64)
    r = np.hypot(xx - grid_center(image.shape[1]),
                 yy - grid_center(image.shape[0]))
    above = image >= threshold_fraction * peak
    return float(r[above].max()) if np.any(above) else 0.0


def fourier_slice_check(slice_img: np.ndarray, geometry: Geometry,
                        max_angles: int = 8, num_freqs: int = 33) -> float:
    """Largest normalized gap between the two routes to the central slice.

    Route one: 1-D Fourier transform of the projection at angle theta, via
    the production projector.  Route two: direct 2-D Fourier transform of the
    image evaluated on the line (nu cos(theta), nu sin(theta)).  Both are
    explicit sums about the grid center, so agreement checks the projector,
    not the FFT.  Angles are an evenly spaced subset of the schedule (at most
    ``max_angles``); frequencies cover |nu| <= Nyquist / 4.  Returns
    max |P - F| / max |F|, or 0 for an all-zero image.
    """
    slice_img = np.asarray(slice_img, dtype=np.float64)
    n = slice_img.shape[0]
    if slice_img.ndim != 2 or slice_img.shape[1] != n:
        raise ValueError("slice must be square")
    margin = int(np.ceil(0.1 * n))
    support = np.abs(slice_img) > 0
    if np.any(support[:margin, :]) or np.any(support[-margin:, :]) or \
            np.any(support[:, :margin]) or np.any(support[:, -margin:]):
        raise ValueError("slice support must keep a 10% margin from the border")
    if not np.any(support):
        return 0.0

    all_angles = geometry.angles()
    step = max(1, len(all_angles) // max_angles)
    angles = all_angles[::step][:max_angles]
    nyquist = 0.5 / geometry.detector_spacing
    nus = np.linspace(-nyquist / 4, nyquist / 4, num_freqs)

    centered = Geometry(num_angles=geometry.num_angles,
                        angle_range=geometry.angle_range,
                        num_detectors=geometry.num_detectors,
                        detector_spacing=geometry.detector_spacing,
                        center_offset=0.0)
    projections = radon_at_angles(slice_img, centered, angles)
    s = centered.detector_coords()

    c = grid_center(n)
    coords = np.arange(n, dtype=np.float64) - c
    xx = coords[None, :]
    yy = coords[:, None]

    worst = 0.0
    for proj, theta in zip(projections, angles):
        p_side = (proj[None, :] *
                  np.exp(-2j * np.pi * nus[:, None] * s[None, :])).sum(axis=1) \
            * geometry.detector_spacing
        phase = xx * np.cos(theta) + yy * np.sin(theta)
        f_side = np.array([(slice_img *
                            np.exp(-2j * np.pi * nu * phase)).sum()
                           for nu in nus])
        denom = np.max(np.abs(f_side))
        if denom == 0:
            continue
        worst = max(worst, float(np.max(np.abs(p_side - f_side)) / denom))
    return worst
