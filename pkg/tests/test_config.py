from pathlib import Path

import pytest

from unfurl.config import (ARTIFACT_ROOT_ENV, AcquisitionConfig, ArtifactPaths,
                           PipelineConfig, apply_overrides)
from unfurl.errors import SpecError
from unfurl.recon import MaskSpec


def test_defaults_validate():
    cfg = PipelineConfig()
    cfg.validate()
    assert cfg.phantom.grid_size == 256
    assert cfg.phantom.sheet_width_px == 400
    assert cfg.geometry.num_angles == 800
    assert cfg.geometry.num_detectors == 256
    assert cfg.mask is None
    assert cfg.band_halfwidth == 2.0


def test_ini_round_trip(tmp_path):
    cfg = PipelineConfig()
    cfg.geometry.num_angles = 96
    cfg.acquisition.noise_sd = 0.01
    cfg.filter.cutoff = 0.8
    cfg.ga.population = 12
    cfg.smoothing = 0.9
    cfg.seed = 11
    cfg.paths = ArtifactPaths(tmp_path / "run1")
    cfg.save(tmp_path / "cfg.ini")
    back = PipelineConfig.load(tmp_path / "cfg.ini")
    assert back == cfg


def test_mask_modes_round_trip(tmp_path):
    auto = PipelineConfig()
    auto.save(tmp_path / "auto.ini")
    assert PipelineConfig.load(tmp_path / "auto.ini").mask is None

    fixed = PipelineConfig()
    fixed.mask = MaskSpec(inner_radius=5.0, outer_radius=30.0)
    fixed.save(tmp_path / "fixed.ini")
    assert PipelineConfig.load(tmp_path / "fixed.ini").mask == fixed.mask


def test_overrides_change_typed_values():
    cfg = PipelineConfig()
    out = apply_overrides(cfg, ["geometry.num_angles=120", "run.seed=7",
                                "acquisition.noise_sd=0.02",
                                "filter.kind=ramp"])
    assert out.geometry.num_angles == 120
    assert out.seed == 7
    assert out.acquisition.noise_sd == 0.02
    assert out.filter.kind == "ramp"
    # original untouched
    assert cfg.geometry.num_angles == 800 and cfg.seed == 0


def test_override_seeds_fixed_mask_from_auto():
    cfg = PipelineConfig()
    assert cfg.mask is None
    out = apply_overrides(cfg, ["mask.outer_radius=40"])
    assert out.mask == MaskSpec(inner_radius=0.0, outer_radius=40.0)
    both = apply_overrides(cfg, ["mask.inner_radius=6", "mask.outer_radius=44"])
    assert both.mask == MaskSpec(inner_radius=6.0, outer_radius=44.0)


def test_override_rejects_malformed():
    cfg = PipelineConfig()
    with pytest.raises(SpecError, match="section.key=value"):
        apply_overrides(cfg, ["geometry.num_angles"])
    with pytest.raises(SpecError, match="section prefix"):
        apply_overrides(cfg, ["num_angles=120"])
    with pytest.raises(SpecError, match="unknown config section"):
        apply_overrides(cfg, ["nope.x=1"])
    with pytest.raises(SpecError, match="unknown config key"):
        apply_overrides(cfg, ["geometry.nope=1"])


def test_env_var_overrides_artifact_root(tmp_path, monkeypatch):
    cfg = PipelineConfig()
    cfg.paths = ArtifactPaths(tmp_path / "from_ini")
    cfg.save(tmp_path / "cfg.ini")
    monkeypatch.setenv(ARTIFACT_ROOT_ENV, str(tmp_path / "from_env"))
    back = PipelineConfig.load(tmp_path / "cfg.ini")
    assert back.paths.root == tmp_path / "from_env"
    monkeypatch.delenv(ARTIFACT_ROOT_ENV)
    assert PipelineConfig.load(tmp_path / "cfg.ini").paths.root == \
        tmp_path / "from_ini"


def test_validate_rejects_bad_run_values():
    cfg = PipelineConfig()
    cfg.smoothing = 2.0
    with pytest.raises(SpecError, match="smoothing"):
        cfg.validate()
    cfg = PipelineConfig()
    cfg.band_halfwidth = 0.0
    with pytest.raises(SpecError, match="band_halfwidth"):
        cfg.validate()
    with pytest.raises(SpecError, match="i0"):
        AcquisitionConfig(i0=0.0).validate()


def test_artifact_layout_lives_under_root():
    paths = ArtifactPaths(Path("runs/demo"))
    root = Path("runs/demo")
    assert paths.frames_dir == root / "frames"
    assert paths.calibration == root / "calibration.json"
    assert paths.volume == root / "slices.f32"
    assert paths.sheet_stem == root / "sheet"
    assert paths.manifest == root / "manifest.json"
    assert paths.config_snapshot == root / "config_used.ini"
