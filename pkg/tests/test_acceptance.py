"""Acceptance suite: one test and one printed verdict line per criterion.

Every check runs headless through the library and the command line; the HTTP
service is never imported here.  Numerical tolerances are pinned next to each
assertion.  The two full pipeline runs (clean and noisy) are module fixtures,
so the end-to-end criteria share them instead of re-simulating.
"""
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from unfurl.calibration import find_axis
from unfurl.cli import main as cli_main
from unfurl.config import PipelineConfig
from unfurl.phantom import PhantomSpec, TextTexture
from unfurl.preprocess import ProjectionStack
from unfurl.projection import Geometry, acquire_volume, radon
from unfurl.raster import disk, gaussian_blob, grid_center
from unfurl.recon import FilterSpec, back_project, fbp, filter_response, \
    fourier_slice_check
from unfurl.segmentation import ControlPoints, GAConfig, SpiralPath, \
    fit_spline, fitness, optimize
from unfurl.storage import load_array, load_sheet, save_control_points
from unfurl.unwrap import TexturedBand, mip_flatten

from conftest import brute_force_back_project, disk_chord, \
    sheet_alignment_score, spiral_min_distance

DISK_R = 100.0


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# full pipeline runs shared by the end-to-end criteria


@pytest.fixture(scope="module")
def clean_run(tmp_path_factory):
    """Default config, noise-free, segmentation seeded from the phantom."""
    root = tmp_path_factory.mktemp("e2e_clean") / "run"
    t0 = time.perf_counter()
    assert cli_main(["all", "--output", str(root), "--seed", "0"]) == 0
    return {"root": root, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="module")
def noisy_run(tmp_path_factory):
    """Stage-by-stage run with sensor noise and a +-2 px perturbed seed."""
    root = tmp_path_factory.mktemp("e2e_noisy") / "run"
    base = ["--output", str(root), "--seed", "0",
            "--set", "acquisition.noise_sd=0.01"]
    for stage in ("simulate", "calibrate", "reconstruct"):
        assert cli_main([stage] + base) == 0

    pts = PipelineConfig().phantom.spiral().control_points(per_turn=8)
    rng = np.random.default_rng(11)
    seed_file = root / "seed_points.json"
    save_control_points(seed_file,
                        ControlPoints(points=pts + rng.uniform(-2.0, 2.0,
                                                               size=pts.shape)))
    assert cli_main(["segment"] + base
                    + ["--control-points", str(seed_file)]) == 0
    assert cli_main(["unwrap"] + base) == 0
    return {"root": root}


def sheet_score(root: Path) -> float:
    sheet = load_sheet(root / "sheet")
    truth, meta = load_array(root / "truth_reference.f32")
    return sheet_alignment_score(sheet.image, sheet.provenance["spacing"],
                                 truth, meta["arc_length"])


# ---------------------------------------------------------------------------
# projector and reconstruction criteria


def test_disk_projection_matches_chord_formula():
    img = disk(256, DISK_R)
    geo = Geometry(num_angles=400, angle_range=2 * np.pi, num_detectors=256)
    t0 = time.perf_counter()
    sino = radon(img, geo)
    elapsed = time.perf_counter() - t0

    det = geo.detector_coords()
    sel = np.abs(det) <= 0.9 * DISK_R
    chord = disk_chord(DISK_R, det[sel])
    rel = np.abs(sino.data[:, sel] - chord[None, :]) / chord[None, :]
    verdict("analytic disk projection",
            float(rel.max()) <= 0.01 and elapsed < 5.0,
            f"max rel err {rel.max():.3%} (tol 1%) over every angle, "
            f"{elapsed:.2f}s (budget 5s)")


def test_fbp_recovers_disk_and_converges_with_angles():
    img = disk(256, DISK_R)
    c = grid_center(256)
    yy, xx = np.mgrid[0:256, 0:256].astype(np.float64)
    m = np.hypot(xx - c, yy - c) <= 0.8 * DISK_R

    errors = {}
    slice_seconds = np.inf
    for num_angles in (100, 200, 400):
        geo = Geometry(num_angles=num_angles, angle_range=2 * np.pi,
                       num_detectors=256)
        sino = radon(img, geo)
        t0 = time.perf_counter()
        rec = fbp(sino, 256, FilterSpec(kind="ram_lak", cutoff=1.0))
        dt = time.perf_counter() - t0
        errors[num_angles] = float(np.sqrt(np.mean((rec.image[m] - img[m]) ** 2)))
        if num_angles == 400:
            slice_seconds = dt

    decreasing = errors[100] > errors[200] > errors[400]
    verdict("disk reconstruction fidelity",
            errors[400] <= 0.05 and decreasing and slice_seconds < 10.0,
            f"rel RMSE {errors[400]:.3%} (tol 5%), "
            f"errors {errors[100]:.4f} > {errors[200]:.4f} > {errors[400]:.4f} "
            f"as angles double, {slice_seconds:.2f}s/slice (budget 10s)")


def test_ramp_filter_frequency_response_is_exact():
    freqs = np.fft.fftfreq(1024, d=1.0)
    worst = 0.0
    for cutoff in (1.0, 0.5):
        resp = filter_response(freqs, FilterSpec(kind="ram_lak", cutoff=cutoff))
        expected = np.abs(freqs)
        expected[np.abs(freqs) > cutoff * 0.5] = 0.0
        worst = max(worst, float(np.max(np.abs(resp - expected))))
    verdict("band-limited ramp response",
            worst <= 1e-12,
            f"max |H - ideal| {worst:.2e} (tol 1e-12) at cutoffs 1.0 and 0.5")


def test_projection_agrees_with_fourier_slices():
    img = gaussian_blob(256, sigma=12.0, amplitude=1.0)
    img[img < 1e-12] = 0.0  # hard compact support for the border margin
    geo = Geometry(num_angles=400, angle_range=2 * np.pi, num_detectors=256)
    gap = fourier_slice_check(img, geo)
    verdict("fourier slice agreement",
            gap <= 1e-2,
            f"normalized route gap {gap:.2e} (tol 1e-2) on a smooth blob")


def test_back_projection_matches_direct_sum():
    geo = Geometry(num_angles=90, angle_range=2 * np.pi, num_detectors=64,
                   center_offset=1.5)
    sino = radon(gaussian_blob(64, sigma=6.0), geo)
    reference = brute_force_back_project(sino.data, geo, 64)
    gap = float(np.max(np.abs(back_project(sino, 64) - reference)))
    verdict("back-projection equivalence",
            gap <= 1e-9,
            f"max abs gap to the double sum {gap:.2e} (tol 1e-9)")


# ---------------------------------------------------------------------------
# calibration criterion


def test_axis_recovery_within_half_pixel():
    spec = PhantomSpec(sheet_width_px=120, sheet_height_px=48,
                       inner_radius=5.0, layer_spacing=7.0, num_turns=2.0,
                       sheet_thickness=1.2, ink_attenuation=0.8,
                       substrate_attenuation=0.3, grid_size=64)
    texture = TextTexture(np.zeros((48, 120)))

    worst_col = worst_tilt = 0.0
    case = 0
    for noise_sd in (0.0, 0.01):
        for offset in (-10.0, -5.0, -1.0, 0.0, 1.0, 5.0, 10.0):
            for tilt_deg in (-1.0, 0.0, 1.0):
                geo = Geometry(num_angles=800, angle_range=2 * np.pi,
                               num_detectors=64, center_offset=offset)
                frames = acquire_volume(spec, texture, geo, i0=1.0,
                                        noise_sd=noise_sd, seed=case,
                                        camera_tilt=np.deg2rad(tilt_deg))
                cal = find_axis(ProjectionStack(frames=frames, geometry=geo,
                                                i0_estimate=1.0))
                worst_col = max(worst_col,
                                abs(cal.center_column - (grid_center(64) + offset)))
                worst_tilt = max(worst_tilt,
                                 abs(np.rad2deg(cal.tilt) - tilt_deg))
                case += 1
    verdict("axis recovery",
            worst_col <= 0.5 and worst_tilt <= 0.1,
            f"{case} cases (offsets to +-10 px, tilts to +-1 deg, noise to 1%): "
            f"worst {worst_col:.3f} px (tol 0.5), {worst_tilt:.4f} deg (tol 0.1)")


# ---------------------------------------------------------------------------
# segmentation criterion


def test_seeded_refinement_improves_perturbed_paths(clean_run):
    slices, _ = load_array(clean_run["root"] / "slices.f32")
    mid = slices[slices.shape[0] // 2]
    spiral = PipelineConfig().phantom.spiral()
    truth_pts = spiral.control_points(per_turn=8)

    monotone = elitist = improved = 0
    deviations = []
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        control = ControlPoints(points=truth_pts
                                + rng.uniform(-2.0, 2.0, size=truth_pts.shape))
        initial = fit_spline(control)
        d0 = spiral_min_distance(spiral, initial.samples[:, 0],
                                 initial.samples[:, 1]).mean()
        history = []
        best = optimize(mid, control,
                        GAConfig(population=24, generations=40, seed=seed),
                        on_generation=lambda gen, fit, path: history.append(fit))
        d1 = spiral_min_distance(spiral, best.samples[:, 0],
                                 best.samples[:, 1]).mean()
        monotone += (len(history) == 40
                     and all(b >= a for a, b in zip(history, history[1:])))
        # the seed sits in the starting population, so elitism floors the result
        elitist += fitness(mid, best).value >= fitness(mid, initial).value
        improved += d1 <= d0
        deviations.append((d0, d1))
    verdict("seeded path refinement",
            monotone == 5 and elitist == 5 and improved == 5,
            f"5 seeds from +-2 px perturbed truth: best fitness non-decreasing "
            f"{monotone}/5, never below the seed {elitist}/5, mean spiral "
            f"deviation improved {improved}/5 "
            + " ".join(f"({a:.2f}->{b:.2f}px)" for a, b in deviations))


# ---------------------------------------------------------------------------
# end-to-end criteria


def test_end_to_end_unwrap_recovers_text(clean_run, noisy_run):
    score_clean = sheet_score(clean_run["root"])
    score_noisy = sheet_score(noisy_run["root"])
    # floors tightened from the minimum targets of 0.8 / 0.6 after measuring
    # 0.946 / 0.863 on this setup
    verdict("end-to-end unwrap",
            score_clean >= 0.9 and score_noisy >= 0.75
            and clean_run["elapsed"] < 300.0,
            f"sheet-vs-reference correlation {score_clean:.3f} clean (floor "
            f"0.9), {score_noisy:.3f} with 1% noise + perturbed seed (floor "
            f"0.75); full run {clean_run['elapsed']:.0f}s (budget 300s)")


DETERMINISM_INI = """\
[phantom]
sheet_width_px = 200
sheet_height_px = 16
inner_radius = 6.0
layer_spacing = 7.0
num_turns = 3.0
sheet_thickness = 1.2
grid_size = 96

[geometry]
num_angles = 200
num_detectors = 96

[acquisition]
noise_sd = 0.01

[ga]
population = 12
generations = 8

[run]
seed = 5
"""


def test_repeat_runs_are_byte_identical(tmp_path):
    cfg_file = tmp_path / "run.ini"
    cfg_file.write_text(DETERMINISM_INI)
    root = tmp_path / "run"
    first = tmp_path / "first"

    # same config, same seed, same root: only the artifacts of run one survive
    # in the copy, so any byte drift in run two is visible
    assert cli_main(["all", "--config", str(cfg_file),
                     "--output", str(root)]) == 0
    shutil.copytree(root, first)
    shutil.rmtree(root)
    assert cli_main(["all", "--config", str(cfg_file),
                     "--output", str(root)]) == 0

    names_a = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    names_b = sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())
    same_tree = names_a == names_b
    # the manifest records wall-clock stage durations and is bookkeeping, not
    # an artifact; everything else must match to the byte
    differing = [str(rel) for rel in names_a
                 if rel.name != "manifest.json"
                 and (first / rel).read_bytes() != (root / rel).read_bytes()]
    verdict("repeat-run determinism",
            same_tree and not differing,
            f"{len(names_a)} files, byte-identical except the manifest"
            + (f"; DIFFER: {differing}" if differing else ""))


# ---------------------------------------------------------------------------
# flattening criterion


def test_flatten_keeps_band_maximum():
    control = ControlPoints(points=np.array([[0.0, 0.0], [2.0, 0.0],
                                             [4.0, 0.0], [6.0, 0.0]]))
    path = SpiralPath(control=control, smoothing=1.0,
                      samples=np.column_stack([np.arange(5) * 0.5,
                                               np.zeros(5)]),
                      arc_length=2.0, spacing=0.5)
    rng = np.random.default_rng(2024)
    cases = failures = 0
    for _ in range(1000):
        values = rng.random((5, 5, 5))
        sheet = mip_flatten(TexturedBand(values=values, band_halfwidth=1.0,
                                         path=path))
        for z in range(5):
            for m in range(5):
                top = -np.inf
                for k in range(5):
                    if values[z, m, k] > top:
                        top = values[z, m, k]
                if sheet.image[z, m] != top:
                    failures += 1
        z, m, k = rng.integers(0, 5, size=3)
        bumped = values.copy()
        bumped[z, m, k] += float(rng.random()) + 0.1
        raised = mip_flatten(TexturedBand(values=bumped, band_halfwidth=1.0,
                                          path=path))
        if np.any(raised.image < sheet.image):
            failures += 1
        cases += 1
    verdict("flattening max projection",
            cases == 1000 and failures == 0,
            f"{cases} random bands: per-pixel band maximum attained and "
            f"raising any probe never lowers the sheet ({failures} failures)")
