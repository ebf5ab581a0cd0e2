"""Texturing, flattening, and merging: from segmented slices to a readable sheet.

The segmented curve is swept across the slice stack: around every arc sample
a short probe along the curve normal reads the reconstructed intensities
(texturing), the maximum over the probe collapses the sheet thickness into
one value (the maximum intensity projection, taken across the sheet normal
rather than the scroll axis so text columns are not stacked on top of each
other), and sheets from different slice ranges merge by per-pixel maximum.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import MergeError
from .raster import bilinear_sample, display_normalize, grid_center
from .segmentation import SpiralPath

NORMAL_STEP = 0.5  # px between probe samples along the curve normal


def path_identity(path: SpiralPath) -> str:
    """Content hash of the path samples; equal curves hash equal across runs."""
    return hashlib.sha256(np.ascontiguousarray(path.samples).tobytes()
                          ).hexdigest()[:16]


@dataclass
class Volume:
    """A stack of reconstructed slices, slice z at ``slices[z]``.

    ``z_start`` records which axial row the first slice corresponds to, so
    sheets cut from different ranges of the same scroll can be merged.
    """

    slices: np.ndarray
    z_start: int = 0

    def __post_init__(self):
        self.slices = np.asarray(self.slices, dtype=np.float64)
        if self.slices.ndim != 3:
            raise ValueError("volume must be (num_slices, height, width)")
        if not np.all(np.isfinite(self.slices)):
            raise ValueError("volume contains non-finite values")

    @property
    def num_slices(self) -> int:
        return self.slices.shape[0]

    @property
    def grid_size(self) -> int:
        return self.slices.shape[1]


@dataclass
class TexturedBand:
    """Probe intensities indexed (z, arc sample, normal offset k in [-K, K])."""

    values: np.ndarray
    band_halfwidth: float
    path: SpiralPath
    z_start: int = 0
    out_of_range: bool = False

    @property
    def num_offsets(self) -> int:
        return self.values.shape[2]


@dataclass
class UnwrappedSheet:
    """The flattened text image: rows are slices, columns arc positions."""

    image: np.ndarray
    band_halfwidth: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.float64)
        if self.image.ndim != 2:
            raise ValueError("sheet image must be 2-D")

    @property
    def z_start(self) -> int:
        return int(self.provenance.get("z_start", 0))

    @property
    def z_stop(self) -> int:
        return self.z_start + self.image.shape[0]


def texture(volume: Volume, path: SpiralPath,
            band_halfwidth: float = 2.0) -> TexturedBand:
    """Sample every slice on a band of offsets along the path's normals.

    For slice z, arc sample m, and offset k, reads the slice bilinearly at
    ``path.samples[m] + k * NORMAL_STEP * normal[m]``.  The path centerline
    must stay within the slice; band probes may leave it and then read that
    slice's minimum, with the event flagged on the result.
    """
    if band_halfwidth <= 0:
        raise ValueError("band_halfwidth must be > 0")
    h, w = volume.slices.shape[1:]
    samples = path.samples
    if np.any(samples[:, 0] < 0) or np.any(samples[:, 0] > w - 1) or \
            np.any(samples[:, 1] < 0) or np.any(samples[:, 1] > h - 1):
        raise ValueError("path centerline leaves the slice bounds")

    k_max = int(round(band_halfwidth / NORMAL_STEP))
    offsets = np.arange(-k_max, k_max + 1) * NORMAL_STEP
    normals = path.normals()
    # probe grid is z-independent: (arc, offset, xy)
    pos = samples[:, None, :] + offsets[None, :, None] * normals[:, None, :]
    cols, rows = pos[..., 0], pos[..., 1]
    outside = np.any((cols < 0) | (cols > w - 1) | (rows < 0) | (rows > h - 1))

    values = np.empty((volume.num_slices,) + cols.shape)
    for z in range(volume.num_slices):
        sl = volume.slices[z]
        values[z] = bilinear_sample(sl, rows, cols, fill=float(sl.min()))
    return TexturedBand(values=values, band_halfwidth=band_halfwidth,
                        path=path, z_start=volume.z_start,
                        out_of_range=bool(outside))


def mip_flatten(band: TexturedBand) -> UnwrappedSheet:
    """Maximum intensity projection across the band's normal offsets.

    Output (z, arc) is the maximum of band values over k, collapsing the
    sheet thickness onto the flattened surface.
    """
    image = band.values.max(axis=2)
    return UnwrappedSheet(image=image, band_halfwidth=band.band_halfwidth,
                          provenance={"z_start": band.z_start,
                                      "path_id": path_identity(band.path),
                                      "num_samples": band.values.shape[1],
                                      "spacing": band.path.spacing,
                                      "out_of_range": band.out_of_range})


def merge(sheets: list[UnwrappedSheet]) -> UnwrappedSheet:
    """Stack sheets by their z ranges; overlapping rows take the per-pixel max.

    All sheets must come from the same path parametrization (equal widths and
    path identity when recorded) and their z ranges must tile an interval
    without gaps.
    """
    if not sheets:
        raise MergeError("nothing to merge")
    width = sheets[0].image.shape[1]
    if any(s.image.shape[1] != width for s in sheets):
        raise MergeError("sheets have different widths; they come from "
                         "different paths or spacings")
    path_ids = {s.provenance.get("path_id") for s in sheets
                if "path_id" in s.provenance}
    if len(path_ids) > 1:
        raise MergeError("sheets were textured along different paths")

    z0 = min(s.z_start for s in sheets)
    z1 = max(s.z_stop for s in sheets)
    covered = np.zeros(z1 - z0, dtype=bool)
    for s in sheets:
        covered[s.z_start - z0: s.z_stop - z0] = True
    if not np.all(covered):
        raise MergeError("sheet z ranges leave gaps; cannot stack rows")

    out = np.full((z1 - z0, width), -np.inf)
    for s in sheets:
        rows = slice(s.z_start - z0, s.z_stop - z0)
        out[rows] = np.maximum(out[rows], s.image)
    merged = UnwrappedSheet(image=out, band_halfwidth=sheets[0].band_halfwidth,
                            provenance=dict(sheets[0].provenance))
    merged.provenance["z_start"] = z0
    merged.provenance["merged_from"] = len(sheets)
    return merged


def z_mip(volume: Volume) -> np.ndarray:
    """Literal axial maximum intensity projection: max over z of every (x, y).

    On an upright scroll this stacks all text rows onto one plane, so it is
    only a debug view; the readable projection is mip_flatten's, taken across
    the sheet normal.
    """
    return volume.slices.max(axis=0)


def render_preview(volume: Volume, path: SpiralPath,
                   band_halfwidth: float = 2.0) -> np.ndarray:
    """Orthographic preview of the textured shell with simple depth shading.

    The shell point for slice z and arc sample m sits at the path sample in
    the slice plane, lifted by z.  Points are projected at a fixed oblique
    view, painted far to near, and shaded brighter when nearer.  Pure
    function of its inputs, so previews are bit-reproducible.
    """
    sheet = mip_flatten(texture(volume, path, band_halfwidth))
    vals = display_normalize(sheet.image)

    azim = np.deg2rad(35.0)
    lift = 0.35
    n = volume.grid_size
    c = grid_center(n)
    x = path.samples[:, 0] - c
    y = path.samples[:, 1] - c
    u = x * np.cos(azim) - y * np.sin(azim)
    d = x * np.sin(azim) + y * np.cos(azim)

    num_z = volume.num_slices
    zs = np.arange(num_z, dtype=np.float64)
    uu = np.broadcast_to(u, (num_z, u.size))
    vv = -zs[:, None] + lift * d[None, :]
    dd = np.broadcast_to(d, (num_z, d.size))

    width = int(np.ceil(uu.max() - uu.min())) + 3
    height = int(np.ceil(vv.max() - vv.min())) + 3
    ui = np.rint(uu - uu.min()).astype(np.intp) + 1
    vi = np.rint(vv - vv.min()).astype(np.intp) + 1

    span = dd.max() - dd.min()
    shade = vals * (0.55 + 0.45 * (dd - dd.min()) / (span if span > 0 else 1.0))

    canvas = np.zeros((height, width))
    order = np.argsort(dd.ravel(), kind="stable")
    canvas[vi.ravel()[order], ui.ravel()[order]] = shade.ravel()[order]
    return canvas
