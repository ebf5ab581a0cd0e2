"""Run configuration: one INI file drives every pipeline stage.

The file bundles the phantom, acquisition geometry, reconstruction filter and
mask, GA settings, and run-level knobs (smoothing, band halfwidth, seed,
artifact root).  ``key=value`` overrides use ``section.key`` dotted names so
CLI flags and config files share one parsing path.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SpecError
from .phantom import PhantomSpec
from .projection import Geometry
from .recon import FilterSpec, MaskSpec
from .segmentation import GAConfig

ARTIFACT_ROOT_ENV = "UNFURL_ARTIFACT_ROOT"
PORT_ENV = "UNFURL_PORT"


@dataclass
class AcquisitionConfig:
    """Source intensity and injected imperfections for simulated scans."""

    i0: float = 1.0
    noise_sd: float = 0.0
    camera_tilt: float = 0.0

    def validate(self) -> None:
        if self.i0 <= 0:
            raise SpecError("i0 must be positive")
        if self.noise_sd < 0:
            raise SpecError("noise_sd must be >= 0")


@dataclass
class ArtifactPaths:
    """Fixed layout of per-run artifacts under one root directory."""

    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    @property
    def frames_dir(self) -> Path:
        return self.root / "frames"

    @property
    def truth(self) -> Path:
        return self.root / "truth_reference.f32"

    @property
    def calibration(self) -> Path:
        return self.root / "calibration.json"

    @property
    def volume(self) -> Path:
        return self.root / "slices.f32"

    @property
    def control_points(self) -> Path:
        return self.root / "control_points.json"

    @property
    def spiral_path(self) -> Path:
        return self.root / "path.json"

    @property
    def sheet_stem(self) -> Path:
        return self.root / "sheet"

    @property
    def preview(self) -> Path:
        return self.root / "preview.png"

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"

    @property
    def config_snapshot(self) -> Path:
        return self.root / "config_used.ini"


def _default_phantom() -> PhantomSpec:
    return PhantomSpec(sheet_width_px=400, sheet_height_px=64,
                       inner_radius=12.0, layer_spacing=16.0, num_turns=3.0,
                       sheet_thickness=1.5, ink_attenuation=0.8,
                       substrate_attenuation=0.3, grid_size=256)


@dataclass
class PipelineConfig:
    phantom: PhantomSpec = field(default_factory=_default_phantom)
    geometry: Geometry = field(default_factory=Geometry)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    filter: FilterSpec = field(default_factory=FilterSpec)
    mask: MaskSpec | None = None  # None -> derive from detected extent
    ga: GAConfig = field(default_factory=GAConfig)
    smoothing: float = 1.0
    band_halfwidth: float = 2.0
    seed: int = 0
    paths: ArtifactPaths = field(default_factory=lambda: ArtifactPaths(Path("runs/default")))

    def validate(self) -> None:
        self.phantom.validate()
        self.geometry.validate()
        self.acquisition.validate()
        self.filter.validate()
        if self.mask is not None:
            self.mask.validate()
        self.ga.validate()
        if not (0.0 <= self.smoothing <= 1.0):
            raise SpecError("smoothing must lie in [0, 1]")
        if self.band_halfwidth <= 0:
            raise SpecError("band_halfwidth must be positive")

    # -- INI round trip --------------------------------------------------

    def to_parser(self) -> configparser.ConfigParser:
        cp = configparser.ConfigParser()
        cp["phantom"] = {k: str(getattr(self.phantom, k))
                         for k in PhantomSpec.__dataclass_fields__}
        cp["geometry"] = {k: str(getattr(self.geometry, k))
                          for k in Geometry.__dataclass_fields__}
        cp["acquisition"] = {k: str(getattr(self.acquisition, k))
                             for k in AcquisitionConfig.__dataclass_fields__}
        cp["filter"] = {"kind": self.filter.kind, "cutoff": str(self.filter.cutoff)}
        if self.mask is None:
            cp["mask"] = {"mode": "auto"}
        else:
            cp["mask"] = {"mode": "fixed",
                          "inner_radius": str(self.mask.inner_radius),
                          "outer_radius": str(self.mask.outer_radius)}
        cp["ga"] = {k: str(getattr(self.ga, k))
                    for k in GAConfig.__dataclass_fields__}
        cp["run"] = {"smoothing": str(self.smoothing),
                     "band_halfwidth": str(self.band_halfwidth),
                     "seed": str(self.seed),
                     "artifact_root": str(self.paths.root)}
        return cp

    def to_ini(self) -> str:
        buf = io.StringIO()
        self.to_parser().write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_ini())

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "PipelineConfig":
        cfg = cls()
        cfg.phantom = _fill(cfg.phantom, cp, "phantom")
        cfg.geometry = _fill(cfg.geometry, cp, "geometry")
        cfg.acquisition = _fill(cfg.acquisition, cp, "acquisition")
        cfg.filter = _fill(cfg.filter, cp, "filter")
        if cp.has_section("mask") and cp.get("mask", "mode", fallback="auto") == "fixed":
            cfg.mask = MaskSpec(inner_radius=cp.getfloat("mask", "inner_radius"),
                                outer_radius=cp.getfloat("mask", "outer_radius"))
        else:
            cfg.mask = None
        cfg.ga = _fill(cfg.ga, cp, "ga")
        if cp.has_section("run"):
            sec = cp["run"]
            cfg.smoothing = float(sec.get("smoothing", cfg.smoothing))
            cfg.band_halfwidth = float(sec.get("band_halfwidth", cfg.band_halfwidth))
            cfg.seed = int(float(sec.get("seed", cfg.seed)))
            cfg.paths = ArtifactPaths(Path(sec.get("artifact_root", str(cfg.paths.root))))
        root_env = os.environ.get(ARTIFACT_ROOT_ENV)
        if root_env:
            cfg.paths = ArtifactPaths(Path(root_env))
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        cp = configparser.ConfigParser()
        with open(path) as fh:
            cp.read_file(fh)
        return cls.from_parser(cp)


def _fill(obj, cp: configparser.ConfigParser, section: str):
    """Overlay INI section values onto a dataclass, keeping field types."""
    if not cp.has_section(section):
        return obj
    sec = cp[section]
    for name in obj.__dataclass_fields__:
        if name not in sec:
            continue
        current = getattr(obj, name)
        raw = sec[name]
        if isinstance(current, bool):
            value = sec.getboolean(name)
        elif isinstance(current, int):
            value = int(float(raw))
        elif isinstance(current, float):
            value = float(raw)
        else:
            value = raw
        setattr(obj, name, value)
    return obj


def apply_overrides(config: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply ``section.key=value`` strings on top of an existing config."""
    cp = config.to_parser()
    for item in overrides:
        if "=" not in item:
            raise SpecError(f"override {item!r} is not of the form section.key=value")
        key, value = item.split("=", 1)
        if "." not in key:
            raise SpecError(f"override key {key!r} needs a section prefix")
        section, name = key.split(".", 1)
        if not cp.has_section(section):
            raise SpecError(f"unknown config section {section!r}")
        if section == "mask" and name != "mode":
            # switching to an explicit mask: make sure both radii exist
            cp.set(section, "mode", "fixed")
            grid = float(cp.get("phantom", "grid_size"))
            if "inner_radius" not in cp[section]:
                cp.set(section, "inner_radius", "0.0")
            if "outer_radius" not in cp[section]:
                cp.set(section, "outer_radius", str(grid / 2.0))
        elif name not in cp[section]:
            raise SpecError(f"unknown config key {section}.{name}")
        cp.set(section, name.strip(), value.strip())
    return PipelineConfig.from_parser(cp)
