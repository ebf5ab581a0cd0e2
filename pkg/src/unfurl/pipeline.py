"""Staged headless pipeline: simulate -> calibrate -> reconstruct -> segment -> unwrap.

Each stage reads its prerequisites from the artifact directory and writes its
outputs plus a manifest entry (artifact hashes, consumed-input hashes, wall
time).  Hashes make staleness visible: rerunning an upstream stage flips the
downstream entries to stale because their recorded input hashes no longer
match the files on disk.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig
from .errors import MissingStageError
from .phantom import flattened_reference, glyph_texture
from .preprocess import (ProjectionStack, centered_geometry,
                         rectified_line_integrals, sinogram_from_rows)
from .projection import acquire_volume
from .recon import MaskSpec, apply_mask, detect_extent_radius, fbp
from .segmentation import ControlPoints, optimize
from .storage import (load_array, load_calibration, load_control_points,
                      load_frames, load_path, read_json, save_array,
                      save_calibration, save_control_points, save_frames,
                      save_image_png16, save_path, save_sheet, sha256_file,
                      write_json)
from .unwrap import Volume, mip_flatten, render_preview, texture
from .calibration import find_axis

STAGE_ORDER = ("simulate", "calibrate", "reconstruct", "segment", "unwrap")

# prerequisite artifacts by stage: {artifact_name: producing_stage}
STAGE_INPUTS = {
    "simulate": {},
    "calibrate": {"frames": "simulate"},
    "reconstruct": {"frames": "simulate", "calibration": "calibrate"},
    "segment": {"volume": "reconstruct"},
    "unwrap": {"volume": "reconstruct", "path": "segment"},
}


def _artifact_path(config: PipelineConfig, name: str) -> Path:
    p = config.paths
    return {"frames": p.frames_dir,
            "truth": p.truth,
            "calibration": p.calibration,
            "volume": p.volume,
            "control_points": p.control_points,
            "path": p.spiral_path,
            "sheet": p.sheet_stem.with_suffix(".f32"),
            "sheet_png": p.sheet_stem.with_suffix(".png"),
            "preview": p.preview}[name]


def hash_artifact(path) -> str:
    """Content hash of a file, or of a directory's sorted (name, hash) list."""
    path = Path(path)
    if path.is_dir():
        import hashlib
        h = hashlib.sha256()
        for child in sorted(path.iterdir()):
            if child.is_file():
                h.update(child.name.encode())
                h.update(bytes.fromhex(sha256_file(child)))
        return h.hexdigest()
    return sha256_file(path)


@dataclass
class RunManifest:
    """Per-run record of stage completions, artifact hashes, and timings."""

    path: Path
    data: dict = field(default_factory=dict)

    @classmethod
    def load_or_create(cls, path) -> "RunManifest":
        path = Path(path)
        if path.exists():
            return cls(path=path, data=read_json(path))
        return cls(path=path, data={"tool": "unfurl", "version": __version__,
                                    "stages": {}})

    def save(self) -> None:
        self.data["version"] = __version__
        self.path.parent.mkdir(parents=True, exist_ok=True)
        write_json(self.path, self.data)

    def stage(self, name: str) -> dict | None:
        return self.data.get("stages", {}).get(name)

    def record_stage(self, name: str, artifacts: dict[str, Path],
                     inputs: dict[str, str], duration_s: float,
                     params: dict) -> None:
        self.data.setdefault("stages", {})[name] = {
            "artifacts": {k: {"path": str(v), "sha256": hash_artifact(v)}
                          for k, v in artifacts.items()},
            "inputs": inputs,
            "duration_s": round(duration_s, 6),
            "params": params,
        }
        self._refresh_staleness()
        self.save()

    def _refresh_staleness(self) -> None:
        """Mark entries whose recorded input hashes no longer match any
        producer's current artifact hash."""
        stages = self.data.get("stages", {})
        current: dict[str, str] = {}
        for entry in stages.values():
            for aname, rec in entry.get("artifacts", {}).items():
                current[aname] = rec["sha256"]
        for entry in stages.values():
            stale = any(current.get(aname) is not None and current[aname] != h
                        for aname, h in entry.get("inputs", {}).items())
            entry["stale"] = stale

    def stale_stages(self) -> list[str]:
        return [name for name, entry in self.data.get("stages", {}).items()
                if entry.get("stale")]


def _require_inputs(config: PipelineConfig, stage: str) -> dict[str, str]:
    """Check prerequisite artifacts exist; return their content hashes."""
    hashes = {}
    for aname, producer in STAGE_INPUTS[stage].items():
        path = _artifact_path(config, aname)
        if not path.exists():
            raise MissingStageError(
                f"stage '{stage}' needs artifact '{aname}' "
                f"({path}) produced by stage '{producer}'; run that stage first")
        hashes[aname] = hash_artifact(path)
    return hashes


# -- stages -------------------------------------------------------------------

def _stage_simulate(config: PipelineConfig, manifest: RunManifest) -> None:
    t0 = time.perf_counter()
    spec = config.phantom
    # scale 2: glyph strokes must come out wider than the reconstruction
    # point spread or the recovered text smears illegibly
    tex = glyph_texture(spec.sheet_width_px, spec.sheet_height_px,
                        seed=config.seed, scale=2)
    frames = acquire_volume(spec, tex, config.geometry,
                            i0=config.acquisition.i0,
                            noise_sd=config.acquisition.noise_sd,
                            seed=config.seed,
                            camera_tilt=config.acquisition.camera_tilt)
    save_frames(config.paths.frames_dir, frames, config.geometry,
                i0=config.acquisition.i0,
                extra_meta={"noise_sd": config.acquisition.noise_sd,
                            "camera_tilt": config.acquisition.camera_tilt,
                            "seed": config.seed})
    truth = flattened_reference(spec, tex)
    save_array(config.paths.truth, truth.flattened_reference,
               meta={"kind": "flattened-reference",
                     "arc_length": truth.spiral.total_arc_length})
    manifest.record_stage(
        "simulate",
        artifacts={"frames": config.paths.frames_dir,
                   "truth": config.paths.truth},
        inputs={},
        duration_s=time.perf_counter() - t0,
        params={"num_angles": config.geometry.num_angles,
                "center_offset": config.geometry.center_offset,
                "noise_sd": config.acquisition.noise_sd,
                "camera_tilt": config.acquisition.camera_tilt,
                "seed": config.seed})


def _stage_calibrate(config: PipelineConfig, manifest: RunManifest) -> None:
    inputs = _require_inputs(config, "calibrate")
    t0 = time.perf_counter()
    stack = load_frames(config.paths.frames_dir)
    cal = find_axis(stack)
    save_calibration(config.paths.calibration, cal)
    manifest.record_stage(
        "calibrate",
        artifacts={"calibration": config.paths.calibration},
        inputs=inputs,
        duration_s=time.perf_counter() - t0,
        params={"center_column": cal.center_column, "tilt": cal.tilt,
                "residual": cal.residual})


def _resolve_mask(config: PipelineConfig, sample_image: np.ndarray) -> MaskSpec:
    if config.mask is not None:
        return config.mask
    grid = sample_image.shape[0]
    extent = detect_extent_radius(sample_image)
    outer = min(1.05 * extent, grid / 2.0) if extent > 0 else grid / 2.0
    return MaskSpec(inner_radius=0.0, outer_radius=outer)


def _stage_reconstruct(config: PipelineConfig, manifest: RunManifest) -> None:
    inputs = _require_inputs(config, "reconstruct")
    t0 = time.perf_counter()
    stack = load_frames(config.paths.frames_dir)
    cal = load_calibration(config.paths.calibration)
    params = cal.rectify_params()
    line_integrals = rectified_line_integrals(stack, params)
    geom = centered_geometry(stack.geometry)
    grid = config.phantom.grid_size
    height = line_integrals.shape[1]

    mid = fbp(sinogram_from_rows(line_integrals, height // 2, geom),
              grid_size=grid, filter_spec=config.filter)
    mask = _resolve_mask(config, mid.image)

    slices = np.empty((height, grid, grid))
    for z in range(height):
        if z == height // 2:
            rec = apply_mask(mid, mask)
        else:
            rec = fbp(sinogram_from_rows(line_integrals, z, geom),
                      grid_size=grid, filter_spec=config.filter, mask=mask)
        slices[z] = rec.image
    save_array(config.paths.volume, slices,
               meta={"kind": "reconstructed-volume",
                     "geometry": {"num_angles": geom.num_angles,
                                  "angle_range": geom.angle_range,
                                  "num_detectors": geom.num_detectors,
                                  "detector_spacing": geom.detector_spacing,
                                  "center_offset": geom.center_offset},
                     "filter": {"kind": config.filter.kind,
                                "cutoff": config.filter.cutoff},
                     "mask": {"inner_radius": mask.inner_radius,
                              "outer_radius": mask.outer_radius},
                     "calibration": {"center_column": cal.center_column,
                                     "tilt": cal.tilt}})
    manifest.record_stage(
        "reconstruct",
        artifacts={"volume": config.paths.volume},
        inputs=inputs,
        duration_s=time.perf_counter() - t0,
        params={"grid_size": grid, "filter_kind": config.filter.kind,
                "filter_cutoff": config.filter.cutoff,
                "mask_inner": mask.inner_radius,
                "mask_outer": mask.outer_radius})


def _stage_segment(config: PipelineConfig, manifest: RunManifest,
                   control_points_path: Path | None = None) -> None:
    inputs = _require_inputs(config, "segment")
    cp_path = Path(control_points_path or config.paths.control_points)
    if not cp_path.exists():
        raise MissingStageError(
            f"stage 'segment' needs a control points file ({cp_path}); "
            "write one (or run stage 'all', which seeds it from the phantom)")
    inputs["control_points"] = hash_artifact(cp_path)
    t0 = time.perf_counter()
    control = load_control_points(cp_path)
    slices, _ = load_array(config.paths.volume)
    reference = slices[slices.shape[0] // 2]
    best = optimize(reference, control, ga=config.ga,
                    smoothing=config.smoothing)
    save_path(config.paths.spiral_path, best)
    manifest.record_stage(
        "segment",
        artifacts={"path": config.paths.spiral_path},
        inputs=inputs,
        duration_s=time.perf_counter() - t0,
        params={"reference_slice": slices.shape[0] // 2,
                "smoothing": config.smoothing,
                "population": config.ga.population,
                "generations": config.ga.generations,
                "seed": config.ga.seed,
                "arc_length": best.arc_length})


def _stage_unwrap(config: PipelineConfig, manifest: RunManifest) -> None:
    inputs = _require_inputs(config, "unwrap")
    t0 = time.perf_counter()
    slices, _ = load_array(config.paths.volume)
    path = load_path(config.paths.spiral_path)
    volume = Volume(slices=slices)
    band = texture(volume, path, band_halfwidth=config.band_halfwidth)
    sheet = mip_flatten(band)
    save_sheet(config.paths.sheet_stem, sheet)
    preview = render_preview(volume, path, band_halfwidth=config.band_halfwidth)
    save_image_png16(config.paths.preview, preview)
    manifest.record_stage(
        "unwrap",
        artifacts={"sheet": config.paths.sheet_stem.with_suffix(".f32"),
                   "sheet_png": config.paths.sheet_stem.with_suffix(".png"),
                   "preview": config.paths.preview},
        inputs=inputs,
        duration_s=time.perf_counter() - t0,
        params={"band_halfwidth": config.band_halfwidth,
                "out_of_range": bool(sheet.provenance.get("out_of_range"))})


def _write_analytic_seed(config: PipelineConfig) -> None:
    """Seed control points from the phantom's spiral, 8 per turn."""
    spiral = config.phantom.spiral()
    control = ControlPoints(points=spiral.control_points(per_turn=8))
    save_control_points(config.paths.control_points, control)


def run_stage(config: PipelineConfig, stage: str,
              control_points_path=None) -> RunManifest:
    """Run one pipeline stage (or ``all``) and update the run manifest."""
    config.validate()
    config.paths.root.mkdir(parents=True, exist_ok=True)
    config.save(config.paths.config_snapshot)
    manifest = RunManifest.load_or_create(config.paths.manifest)

    if stage == "all":
        _stage_simulate(config, manifest)
        _stage_calibrate(config, manifest)
        _stage_reconstruct(config, manifest)
        _write_analytic_seed(config)
        _stage_segment(config, manifest)
        _stage_unwrap(config, manifest)
        return manifest

    runners = {"simulate": _stage_simulate,
               "calibrate": _stage_calibrate,
               "reconstruct": _stage_reconstruct,
               "unwrap": _stage_unwrap}
    if stage == "segment":
        _stage_segment(config, manifest, control_points_path)
    elif stage in runners:
        runners[stage](config, manifest)
    else:
        raise ValueError(f"unknown stage {stage!r}; "
                         f"choose from {STAGE_ORDER + ('all',)}")
    return manifest
