"""HTTP service for the two interactive stages: axis finding and segmentation.

Everything lives under a version-stamped ``/v1/`` prefix and speaks JSON.
Responses carry explicit dimensions and value ranges so clients never guess.
The service only reads artifacts written by the CLI stages plus two
mutations (accept calibration, accept optimized path); writes are serialized
behind one lock.  Optimize runs as an asynchronous job: submit returns an id,
polling returns generation, best fitness, and the current best samples.
"""

from __future__ import annotations

import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .calibration import AxisCalibration, difference_image, _pair_indices
from .config import PipelineConfig
from .errors import PathIntersectionError, SpecError
from .pipeline import RunManifest, _stage_unwrap, hash_artifact
from .preprocess import RectifyParams
from .segmentation import ControlPoints, fit_spline, optimize
from .storage import (load_array, load_frames, load_sheet, save_calibration,
                      save_path)

NUM_DIFFERENCE_PAIRS = 4


def _bad_request(field: str, message: str):
    raise HTTPException(status_code=400,
                        detail=[{"field": field, "message": message}])


def _not_found(message: str):
    raise HTTPException(status_code=404, detail=message)


def _round(values: np.ndarray, digits: int = 6):
    return np.round(np.asarray(values, dtype=np.float64), digits).tolist()


class CalibrationBody(BaseModel):
    center_column: float
    tilt: float
    residual: float = 0.0
    pair_index: int = 0


class FitBody(BaseModel):
    points: list[list[float]]
    smoothing: float | None = None


class OptimizeBody(BaseModel):
    points: list[list[float]]
    smoothing: float | None = None
    slice_index: int | None = None
    seed: int | None = None
    population: int | None = None
    generations: int | None = None


class AcceptBody(BaseModel):
    job_id: str


def _control_points_or_400(points: list[list[float]]) -> ControlPoints:
    if len(points) < 4:
        _bad_request("points", f"need at least 4 control points, got {len(points)}")
    try:
        return ControlPoints(points=np.asarray(points, dtype=np.float64))
    except (SpecError, ValueError) as exc:
        _bad_request("points", str(exc))


class JobRegistry:
    """Asynchronous optimize jobs; at most ``max_workers`` run at once."""

    def __init__(self, max_workers: int = 1):
        self._executor = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._counter = itertools.count()

    def submit(self, fn, *args) -> str:
        with self._lock:
            job_id = f"job-{next(self._counter):04d}"
            self._jobs[job_id] = {"state": "queued", "generation": 0,
                                  "best_fitness": None, "best_samples": None,
                                  "result": None, "error": None}
        self._executor.submit(self._run, job_id, fn, *args)
        return job_id

    def _run(self, job_id, fn, *args):
        self.update(job_id, state="running")
        try:
            result = fn(job_id, *args)
            self.update(job_id, state="done", result=result)
        except Exception as exc:
            self.update(job_id, state="failed", error=str(exc))

    def update(self, job_id: str, **fields) -> None:
        with self._lock:
            self._jobs[job_id].update(fields)

    def get(self, job_id: str) -> dict | None:
        with self._lock:
            job = self._jobs.get(job_id)
            return dict(job) if job is not None else None


def create_app(config: PipelineConfig, max_jobs: int = 1) -> FastAPI:
    config.validate()
    app = FastAPI(title="unfurl service", version=__version__)
    jobs = JobRegistry(max_workers=max_jobs)
    write_lock = threading.Lock()
    paths = config.paths

    def load_stack():
        if not paths.frames_dir.exists():
            _not_found(f"no projection frames at {paths.frames_dir}; run stage 'simulate'")
        return load_frames(paths.frames_dir)

    def load_volume() -> np.ndarray:
        if not paths.volume.exists():
            _not_found(f"no reconstructed volume at {paths.volume}; run stage 'reconstruct'")
        slices, _ = load_array(paths.volume)
        return slices

    @app.get("/v1/meta")
    def meta():
        return {"tool": "unfurl", "version": __version__,
                "artifact_root": str(paths.root),
                "artifacts": {name: path.exists() for name, path in
                              [("frames", paths.frames_dir),
                               ("calibration", paths.calibration),
                               ("volume", paths.volume),
                               ("path", paths.spiral_path),
                               ("sheet", paths.sheet_stem.with_suffix(".f32"))]}}

    @app.get("/v1/projections")
    def projections():
        stack = load_stack()
        g = stack.geometry
        pair_list = _pair_indices(g.num_angles, NUM_DIFFERENCE_PAIRS)
        h, w = stack.frame_shape
        return {"num_frames": len(stack.frames),
                "frame_shape": [h, w],
                "i0": stack.i0_estimate,
                "geometry": {"num_angles": g.num_angles,
                             "angle_range": g.angle_range,
                             "num_detectors": g.num_detectors,
                             "detector_spacing": g.detector_spacing},
                "pairs": [{"pair_index": k, "angle_index": int(i)}
                          for k, i in enumerate(pair_list)],
                "frames": [f"frame_{i:04d}.png" for i in range(len(stack.frames))]}

    @app.get("/v1/difference")
    def difference(pair: int = 0, center: float | None = None, tilt: float = 0.0):
        stack = load_stack()
        pair_list = _pair_indices(stack.geometry.num_angles, NUM_DIFFERENCE_PAIRS)
        if not (0 <= pair < len(pair_list)):
            _bad_request("pair", f"pair must lie in [0, {len(pair_list)})")
        h, w = stack.frame_shape
        if center is None:
            center = (w - 1) / 2.0
        if not (0.0 <= center <= w - 1):
            _bad_request("center", f"center must lie in [0, {w - 1}]")
        if not (abs(tilt) < np.pi / 8):
            _bad_request("tilt", "|tilt| must be below pi/8 radians")
        params = RectifyParams(center_column=float(center), tilt=float(tilt))
        diff = difference_image(stack, int(pair_list[pair]), params)
        frame_range = float(max(f.data.max() for f in stack.frames))
        return {"pair_index": pair,
                "angle_index": diff.angle_index,
                "opposite_angle_index": diff.opposite_angle_index,
                "shape": list(diff.signed.shape),
                "values": _round(diff.signed),
                "value_min": float(diff.signed.min()),
                "value_max": float(diff.signed.max()),
                "frame_range": frame_range,
                "residual": diff.residual,
                "render_hint": diff.render_hint}

    @app.post("/v1/calibration")
    def post_calibration(body: CalibrationBody):
        if not (abs(body.tilt) < np.pi / 8):
            _bad_request("tilt", "|tilt| must be below pi/8 radians")
        if not np.isfinite(body.center_column):
            _bad_request("center_column", "center_column must be finite")
        cal = AxisCalibration(center_column=body.center_column, tilt=body.tilt,
                              residual=body.residual, pair_index=body.pair_index)
        with write_lock:
            save_calibration(paths.calibration, cal)
            manifest = RunManifest.load_or_create(paths.manifest)
            inputs = {}
            if paths.frames_dir.exists():
                inputs["frames"] = hash_artifact(paths.frames_dir)
            manifest.record_stage("calibrate",
                                  artifacts={"calibration": paths.calibration},
                                  inputs=inputs, duration_s=0.0,
                                  params={"source": "accepted",
                                          "center_column": cal.center_column,
                                          "tilt": cal.tilt,
                                          "residual": cal.residual})
        return {"stored": True, "center_column": cal.center_column,
                "tilt": cal.tilt, "residual": cal.residual,
                "pair_index": cal.pair_index}

    @app.get("/v1/slices")
    def slices_meta():
        slices = load_volume()
        return {"num_slices": int(slices.shape[0]),
                "shape": [int(slices.shape[1]), int(slices.shape[2])],
                "value_min": float(slices.min()),
                "value_max": float(slices.max())}

    @app.get("/v1/slices/{z}")
    def get_slice(z: int):
        slices = load_volume()
        if not (0 <= z < slices.shape[0]):
            _not_found(f"slice {z} outside [0, {slices.shape[0]})")
        img = slices[z]
        lo, hi = float(img.min()), float(img.max())
        span = hi - lo if hi > lo else 1.0
        return {"z": z, "shape": list(img.shape),
                "values": _round((img - lo) / span),
                "value_min": lo, "value_max": hi,
                "normalized": True}

    @app.post("/v1/path/fit")
    def fit(body: FitBody):
        control = _control_points_or_400(body.points)
        smoothing = config.smoothing if body.smoothing is None else body.smoothing
        if not (0.0 <= smoothing <= 1.0):
            _bad_request("smoothing", "smoothing must lie in [0, 1]")
        try:
            path = fit_spline(control, smoothing=smoothing)
        except PathIntersectionError as exc:
            _bad_request("points", f"path self-intersects near {exc.location}")
        except (SpecError, ValueError) as exc:
            _bad_request("points", str(exc))
        return {"num_samples": len(path.samples),
                "shape": [len(path.samples), 2],
                "samples": _round(path.samples),
                "arc_length": path.arc_length,
                "spacing": path.spacing,
                "smoothing": smoothing}

    @app.post("/v1/optimize")
    def submit_optimize(body: OptimizeBody):
        control = _control_points_or_400(body.points)
        smoothing = config.smoothing if body.smoothing is None else body.smoothing
        if not (0.0 <= smoothing <= 1.0):
            _bad_request("smoothing", "smoothing must lie in [0, 1]")
        slices = load_volume()
        z = slices.shape[0] // 2 if body.slice_index is None else body.slice_index
        if not (0 <= z < slices.shape[0]):
            _bad_request("slice_index", f"slice_index outside [0, {slices.shape[0]})")
        ga = replace(config.ga)
        if body.seed is not None:
            ga.seed = body.seed
        if body.population is not None:
            ga.population = body.population
        if body.generations is not None:
            ga.generations = body.generations
        try:
            ga.validate()
        except SpecError as exc:
            _bad_request("ga", str(exc))
        image = slices[z]

        def run(job_id: str):
            def on_generation(gen, best_fitness, best_path):
                fields = {"generation": gen + 1}
                # best_path stays None while every candidate is infeasible
                if best_path is not None:
                    fields["best_fitness"] = float(best_fitness)
                    fields["best_samples"] = _round(best_path.samples, 4)
                jobs.update(job_id, **fields)
            best = optimize(image, control, ga=ga, smoothing=smoothing,
                            on_generation=on_generation)
            return {"path": best, "slice_index": z}

        job_id = jobs.submit(run)
        return {"job_id": job_id, "state": "queued",
                "generations_total": ga.generations, "slice_index": z}

    @app.get("/v1/jobs/{job_id}")
    def poll_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            _not_found(f"no job {job_id}")
        out = {"job_id": job_id, "state": job["state"],
               "generation": job["generation"],
               "best_fitness": job["best_fitness"],
               "best_samples": job["best_samples"]}
        if job["state"] == "failed":
            out["error"] = job["error"]
        if job["state"] == "done":
            path = job["result"]["path"]
            out["arc_length"] = path.arc_length
            out["num_samples"] = len(path.samples)
        return out

    @app.post("/v1/path/accept")
    def accept_path(body: AcceptBody):
        job = jobs.get(body.job_id)
        if job is None:
            _not_found(f"no job {body.job_id}")
        if job["state"] != "done":
            _bad_request("job_id", f"job {body.job_id} is {job['state']}, not done")
        path = job["result"]["path"]
        with write_lock:
            save_path(paths.spiral_path, path)
            manifest = RunManifest.load_or_create(paths.manifest)
            inputs = {}
            if paths.volume.exists():
                inputs["volume"] = hash_artifact(paths.volume)
            manifest.record_stage("segment",
                                  artifacts={"path": paths.spiral_path},
                                  inputs=inputs, duration_s=0.0,
                                  params={"source": "accepted",
                                          "job_id": body.job_id,
                                          "slice_index": job["result"]["slice_index"],
                                          "arc_length": path.arc_length})
            _stage_unwrap(config, manifest)
        return {"stored": True, "arc_length": path.arc_length,
                "num_samples": len(path.samples)}

    @app.get("/v1/sheet")
    def get_sheet():
        stem = paths.sheet_stem
        if not stem.with_suffix(".f32").exists():
            _not_found(f"no unwrapped sheet at {stem}; run stage 'unwrap'")
        sheet = load_sheet(stem)
        img = sheet.image
        lo, hi = float(img.min()), float(img.max())
        span = hi - lo if hi > lo else 1.0
        return {"shape": list(img.shape),
                "num_slices": int(img.shape[0]),
                "num_samples": int(img.shape[1]),
                "values": _round((img - lo) / span),
                "value_min": lo, "value_max": hi,
                "band_halfwidth": sheet.band_halfwidth,
                "provenance": sheet.provenance}

    return app


def serve(config: PipelineConfig, port: int = 8787, max_jobs: int = 1):
    """Run the service until interrupted."""
    import uvicorn
    app = create_app(config, max_jobs=max_jobs)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
