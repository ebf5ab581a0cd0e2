"""Rolled-sheet phantoms with analytically known geometry.

A phantom is a constant-pitch spiral sheet whose flattened surface carries a
text raster.  Because the spiral is analytic, every derived quantity the rest
of the pipeline estimates (layer curve, arc length, flattened text) has an
exact reference here.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import SpecError
from .raster import grid_center


class ArchimedeanSpiral:
    """Constant-pitch spiral r(phi) = inner_radius + pitch * phi / (2 pi).

    ``center`` is (x, y) in slice pixel coordinates.  Arc length is available
    in closed form, which the sampling helpers use; ``phi_of_arc`` inverts it
    with a table lookup polished by one Newton step.
    """

    def __init__(self, center: tuple[float, float], inner_radius: float,
                 layer_spacing: float, num_turns: float):
        if layer_spacing <= 0 or num_turns <= 0:
            raise SpecError("layer_spacing and num_turns must be positive")
        self.center = (float(center[0]), float(center[1]))
        self.inner_radius = float(inner_radius)
        self.layer_spacing = float(layer_spacing)
        self.num_turns = float(num_turns)
        self.phi_max = 2.0 * np.pi * self.num_turns
        self._b = self.layer_spacing / (2.0 * np.pi)

    def radius(self, phi):
        return self.inner_radius + self._b * np.asarray(phi, dtype=np.float64)

    @property
    def outer_radius(self) -> float:
        return float(self.radius(self.phi_max))

    def point(self, phi):
        phi = np.asarray(phi, dtype=np.float64)
        r = self.radius(phi)
        return np.stack([self.center[0] + r * np.cos(phi),
                         self.center[1] + r * np.sin(phi)], axis=-1)

    def _arc_antiderivative(self, rho):
        # integral of sqrt(rho^2 + b^2) d rho / b
        b = self._b
        return (rho * np.hypot(rho, b) + b * b * np.arcsinh(rho / b)) / (2.0 * b)

    def arc_length(self, phi):
        """Arc length from phi = 0 to ``phi`` (closed form)."""
        rho = self.radius(phi)
        return self._arc_antiderivative(rho) - self._arc_antiderivative(self.inner_radius)

    @property
    def total_arc_length(self) -> float:
        return float(self.arc_length(self.phi_max))

    def phi_of_arc(self, s):
        s = np.asarray(s, dtype=np.float64)
        table_phi = np.linspace(0.0, self.phi_max, 4096)
        table_s = self.arc_length(table_phi)
        phi = np.interp(s, table_s, table_phi)
        # one Newton step: ds/dphi = sqrt(r^2 + b^2)
        ds = self.arc_length(phi) - s
        phi = phi - ds / np.hypot(self.radius(phi), self._b)
        return np.clip(phi, 0.0, self.phi_max)

    def sample_by_arc(self, spacing: float) -> np.ndarray:
        """Points at uniform arc-length ``spacing``, starting at the inner end."""
        total = self.total_arc_length
        n = int(np.floor(total / spacing)) + 1
        s = np.arange(n) * spacing
        return self.point(self.phi_of_arc(s))

    def control_points(self, per_turn: int = 8) -> np.ndarray:
        """Decimated points (uniform in winding angle), e.g. a segmentation seed."""
        n = max(int(round(per_turn * self.num_turns)), 3) + 1
        phi = np.linspace(0.0, self.phi_max, n)
        return self.point(phi)


@dataclass
class PhantomSpec:
    sheet_width_px: int
    sheet_height_px: int
    inner_radius: float
    layer_spacing: float
    num_turns: float
    sheet_thickness: float
    ink_attenuation: float
    substrate_attenuation: float
    grid_size: int

    def validate(self) -> None:
        if self.layer_spacing <= 0:
            raise SpecError("layer_spacing must be > 0")
        if self.num_turns <= 0:
            raise SpecError("num_turns must be > 0")
        if self.sheet_thickness <= 0:
            raise SpecError("sheet_thickness must be > 0")
        if not (self.ink_attenuation > self.substrate_attenuation >= 0):
            raise SpecError("need ink_attenuation > substrate_attenuation >= 0")
        outer = self.inner_radius + self.num_turns * self.layer_spacing + self.sheet_thickness
        if outer >= self.grid_size / 2:
            raise SpecError(
                f"spiral (outer extent {outer:.1f}) does not fit inside "
                f"grid_size/2 = {self.grid_size / 2:.1f}")
        if self.layer_spacing <= 2 * self.sheet_thickness:
            raise SpecError("layer_spacing must exceed twice the sheet thickness")
        if self.sheet_width_px < 1 or self.sheet_height_px < 1:
            raise SpecError("sheet dimensions must be positive")

    def spiral(self) -> ArchimedeanSpiral:
        c = grid_center(self.grid_size)
        return ArchimedeanSpiral((c, c), self.inner_radius,
                                 self.layer_spacing, self.num_turns)

    def to_config_file(self, path) -> None:
        cp = configparser.ConfigParser()
        cp["phantom"] = {k: str(getattr(self, k)) for k in self.__dataclass_fields__}
        with open(path, "w") as fh:
            cp.write(fh)

    @classmethod
    def from_config_file(cls, path) -> "PhantomSpec":
        cp = configparser.ConfigParser()
        with open(path) as fh:
            cp.read_file(fh)
        sec = cp["phantom"]
        kwargs = {}
        for name, f in cls.__dataclass_fields__.items():
            conv = int if f.type in ("int", int) else float
            kwargs[name] = conv(sec[name]) if conv is float else int(float(sec[name]))
        return cls(**kwargs)


@dataclass
class TextTexture:
    """Raster carried by the flattened sheet; values in [0, 1], 1 = ink."""

    pixels: np.ndarray
    origin_note: str = ""

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2:
            raise ValueError("texture must be a 2-D raster")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("texture values must lie in [0, 1]")


@dataclass
class GroundTruth:
    spiral: ArchimedeanSpiral
    flattened_reference: np.ndarray


def texture_column_for_arc(arc, total_length: float, width: int):
    """Map arc-length position(s) along the sheet to a texture column index."""
    col = np.floor(np.asarray(arc, dtype=np.float64) / total_length * width)
    return np.clip(col, 0, width - 1).astype(np.intp)


def _check_texture(spec: PhantomSpec, texture: TextTexture) -> None:
    h, w = texture.pixels.shape
    if h != spec.sheet_height_px or w != spec.sheet_width_px:
        raise ValueError(
            f"texture {h}x{w} does not match sheet "
            f"{spec.sheet_height_px}x{spec.sheet_width_px}")


def rasterize_slice(spec: PhantomSpec, texture: TextTexture, z: int) -> np.ndarray:
    """Attenuation map of cross-section ``z`` on a grid_size x grid_size grid.

    Pixels within half the sheet thickness of the spiral carry the substrate
    attenuation plus the ink excess where texture row ``z`` marks ink at the
    pixel's arc-length position.  The sheet edge is anti-aliased over one
    pixel.
    """
    spec.validate()
    _check_texture(spec, texture)
    if not (0 <= z < spec.sheet_height_px):
        raise IndexError(f"z={z} outside [0, {spec.sheet_height_px})")

    n = spec.grid_size
    spiral = spec.spiral()
    total = spiral.total_arc_length
    half = spec.sheet_thickness / 2.0

    # dense polyline; 0.25 px chords keep the chord-vs-arc error far below
    # the one-pixel anti-aliasing band
    step = 0.25
    poly = spiral.sample_by_arc(step)
    tree = cKDTree(poly)

    cx = cy = grid_center(n)
    xs = np.arange(n) - cx
    ys = np.arange(n) - cy
    X, Y = np.meshgrid(xs, ys)
    rad = np.hypot(X, Y)
    band = (rad >= spiral.inner_radius - half - 1.5) & \
           (rad <= spiral.outer_radius + half + 1.5)
    px = X[band] + cx
    py = Y[band] + cy
    pts = np.stack([px, py], axis=-1)

    _, idx = tree.query(pts, k=1, workers=-1)

    # distance to the polyline near the closest vertex, tracking arc position
    best_d = np.full(len(pts), np.inf)
    best_arc = np.zeros(len(pts))
    nseg = len(poly) - 1
    for off in (-2, -1, 0, 1):
        s0 = np.clip(idx + off, 0, nseg - 1)
        a = poly[s0]
        b = poly[s0 + 1]
        ab = b - a
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.einsum("ij,ij->i", pts - a, ab) / np.where(denom > 0, denom, 1.0)
        t = np.clip(t, 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.hypot(*(pts - proj).T)
        better = d < best_d
        best_d = np.where(better, d, best_d)
        best_arc = np.where(better, (s0 + t) * step, best_arc)

    coverage = np.clip(half + 0.5 - best_d, 0.0, 1.0)
    cols = texture_column_for_arc(best_arc, total, spec.sheet_width_px)
    texval = texture.pixels[z, cols]
    att = coverage * (spec.substrate_attenuation
                      + (spec.ink_attenuation - spec.substrate_attenuation) * texval)

    out = np.zeros((n, n))
    out[band] = att
    return out


def flattened_reference(spec: PhantomSpec, texture: TextTexture) -> GroundTruth:
    """Texture resampled to the arc-length parametrization a perfect unwrap yields.

    Reference width equals the rounded total arc length; column ``u`` carries
    the texture column under the same arc-to-column mapping the rasterizer
    uses, so a lossless pipeline reproduces it pixel for pixel.
    """
    spec.validate()
    _check_texture(spec, texture)
    spiral = spec.spiral()
    total = spiral.total_arc_length
    w_ref = int(round(total))
    arc = (np.arange(w_ref) + 0.5) / w_ref * total
    cols = texture_column_for_arc(arc, total, spec.sheet_width_px)
    ref = texture.pixels[:, cols]
    return GroundTruth(spiral=spiral, flattened_reference=ref)


# 5x7 dot-matrix glyphs for self-contained synthetic text
_GLYPHS = {
    "A": ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
    "E": ["11111", "10000", "10000", "11110", "10000", "10000", "11111"],
    "H": ["10001", "10001", "10001", "11111", "10001", "10001", "10001"],
    "K": ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
    "L": ["10000", "10000", "10000", "10000", "10000", "10000", "11111"],
    "N": ["10001", "11001", "11001", "10101", "10011", "10011", "10001"],
    "O": ["01110", "10001", "10001", "10001", "10001", "10001", "01110"],
    "P": ["11110", "10001", "10001", "11110", "10000", "10000", "10000"],
    "S": ["01111", "10000", "10000", "01110", "00001", "00001", "11110"],
    "T": ["11111", "00100", "00100", "00100", "00100", "00100", "00100"],
    "V": ["10001", "10001", "10001", "10001", "10001", "01010", "00100"],
    "X": ["10001", "01010", "00100", "00100", "00100", "01010", "10001"],
    "Y": ["10001", "01010", "00100", "00100", "00100", "00100", "00100"],
    "Z": ["11111", "00001", "00010", "00100", "01000", "10000", "11111"],
    " ": ["00000", "00000", "00000", "00000", "00000", "00000", "00000"],
}


def glyph_texture(width: int, height: int, seed: int = 0, scale: int = 1,
                  ink_fraction: float = 0.8) -> TextTexture:
    """Deterministic lines of dot-matrix pseudo-text filling a width x height raster.

    ``scale`` magnifies the 5x7 glyph cells; ``ink_fraction`` is the chance a
    cell holds a letter rather than a space.
    """
    rng = np.random.default_rng(seed)
    letters = [k for k in _GLYPHS if k != " "]
    img = np.zeros((height, width))
    cell_w, cell_h = 6 * scale, 9 * scale
    for row0 in range(scale, height - 7 * scale + 1, cell_h):
        for col0 in range(scale, width - 5 * scale + 1, cell_w):
            if rng.random() > ink_fraction:
                continue
            glyph = _GLYPHS[letters[rng.integers(len(letters))]]
            for gy, line in enumerate(glyph):
                for gx, bit in enumerate(line):
                    if bit == "1":
                        img[row0 + gy * scale: row0 + (gy + 1) * scale,
                            col0 + gx * scale: col0 + (gx + 1) * scale] = 1.0
    return TextTexture(pixels=img, origin_note=f"synthetic glyphs seed={seed}")
