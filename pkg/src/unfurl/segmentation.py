"""Layer-curve segmentation: spline paths through a slice and their refinement.

A path is seeded by hand-picked control points, turned into a smooth curve by
a chord-length cubic smoothing spline, resampled at uniform arc spacing, and
scored by the mean slice intensity under it (the sheet is denser than air,
ink denser than substrate, so the true layer curve is a bright ridge).  A
small generational GA with elitism nudges the control points to maximize
that score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, make_smoothing_spline
from shapely.geometry import LineString

from .errors import OptimizationError, PathIntersectionError
from .raster import bilinear_sample
from .recon import ReconSlice

RESAMPLE_SPACING = 0.5   # pixels of arc length between path samples
DENSE_PER_SPAN = 20      # spline evaluations per control-point span
MIN_POINT_GAP = 0.5      # px; closer consecutive control points are degenerate
PENALTY_FACTOR = 10.0    # self-intersection penalty, in units of slice max
TOURNAMENT_SIZE = 3
MUTATION_ANNEAL = 0.99   # per-generation decay of the mutation scale
MAX_INFEASIBLE_GENERATIONS = 10


@dataclass
class ControlPoints:
    """Ordered (x, y) pixel positions tracing the layer curve; always open."""

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.closed:
            raise ValueError("closed paths are not supported; a spiral is open")
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("control points must be an (N, 2) array")
        if self.points.shape[0] < 4:
            raise ValueError("need at least 4 control points for a cubic path")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("control points must be finite")
        gaps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        if np.any(gaps <= MIN_POINT_GAP):
            raise ValueError(
                f"consecutive control points must be over {MIN_POINT_GAP} px apart")
        if not LineString(self.points).is_simple:
            raise ValueError("control polyline must not intersect itself")

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class SpiralPath:
    """A fitted curve resampled at uniform arc spacing.

    ``samples`` is (M, 2) in (x, y) pixels with sample k at arc position
    k * spacing; ``arc_length`` is the total fitted curve length.
    """

    control: ControlPoints
    smoothing: float
    samples: np.ndarray
    arc_length: float
    spacing: float = RESAMPLE_SPACING

    @property
    def arc_positions(self) -> np.ndarray:
        return np.arange(self.samples.shape[0]) * self.spacing

    def tangents(self) -> np.ndarray:
        """Unit tangents by central differences (one-sided at the ends)."""
        d = np.gradient(self.samples, self.spacing, axis=0)
        norms = np.linalg.norm(d, axis=1)
        norms[norms == 0] = 1.0
        return d / norms[:, None]

    def normals(self) -> np.ndarray:
        """Unit normals: tangents rotated +90 degrees (left of travel)."""
        t = self.tangents()
        return np.stack([-t[:, 1], t[:, 0]], axis=1)


def _spline_1d(t: np.ndarray, values: np.ndarray, smoothing: float):
    if smoothing >= 1.0:
        return CubicSpline(t, values)
    if smoothing <= 0.0:
        # limit of infinite roughness penalty: the least-squares line
        coeffs = np.polynomial.polynomial.polyfit(t, values, 1)
        return np.polynomial.polynomial.Polynomial(coeffs)
    lam = ((1.0 - smoothing) / smoothing) * float(np.mean(np.diff(t))) ** 3
    return make_smoothing_spline(t, values, lam=lam)


def _first_self_intersection(samples: np.ndarray) -> tuple[float, float] | None:
    """Approximate location of the first crossing of a polyline with itself."""
    step = max(1, samples.shape[0] // 400)
    pts = samples[::step]
    d = np.diff(pts, axis=0)
    for i in range(len(d) - 2):
        p, r = pts[i], d[i]
        qs, ss = pts[i + 2:-1], d[i + 2:]
        denom = r[0] * ss[:, 1] - r[1] * ss[:, 0]
        dq = qs - p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (dq[:, 0] * ss[:, 1] - dq[:, 1] * ss[:, 0]) / denom
            u = (dq[:, 0] * r[1] - dq[:, 1] * r[0]) / denom
        hit = np.isfinite(t) & np.isfinite(u) & (t >= 0) & (t <= 1) & \
            (u >= 0) & (u <= 1)
        if np.any(hit):
            t0 = t[hit][0]
            return (float(p[0] + t0 * r[0]), float(p[1] + t0 * r[1]))
    return None


def fit_spline(control: ControlPoints, smoothing: float = 1.0,
               spacing: float = RESAMPLE_SPACING) -> SpiralPath:
    """Chord-length cubic smoothing spline, resampled at uniform arc length.

    ``smoothing`` is 1 for pure interpolation and trades point fidelity for
    smoothness as it drops toward 0 (the 0 limit is the least-squares line);
    the roughness weight is scaled by the cube of the mean parameter step so
    the knob is resolution independent.  Samples land at exact multiples of
    ``spacing``, so a final sliver shorter than ``spacing`` is dropped.  A
    self-crossing result is a fit error carrying the crossing location.
    """
    if not 0.0 <= smoothing <= 1.0:
        raise ValueError("smoothing must be in [0, 1]")
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    pts = control.points
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    t = np.concatenate([[0.0], np.cumsum(chords)])
    sx = _spline_1d(t, pts[:, 0], smoothing)
    sy = _spline_1d(t, pts[:, 1], smoothing)

    dense_t = np.linspace(0.0, t[-1], DENSE_PER_SPAN * (len(pts) - 1) + 1)
    dense = np.stack([sx(dense_t), sy(dense_t)], axis=1)
    seg = np.linalg.norm(np.diff(dense, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(arc[-1])
    if not np.isfinite(total) or total <= spacing:
        raise ValueError("fitted path is degenerate (near-zero length)")

    targets = np.arange(0.0, total + spacing * 1e-9, spacing)
    t_of_arc = np.interp(targets, arc, dense_t)
    samples = np.stack([sx(t_of_arc), sy(t_of_arc)], axis=1)
    if not LineString(samples).is_simple:
        raise PathIntersectionError(
            "fitted path crosses itself",
            location=_first_self_intersection(samples))
    return SpiralPath(control=control, smoothing=smoothing, samples=samples,
                      arc_length=total, spacing=spacing)


@dataclass
class Fitness:
    """Arc-normalized on-curve intensity score; higher is better."""

    value: float

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("fitness must be finite")


def _slice_image(recon) -> np.ndarray:
    if isinstance(recon, ReconSlice):
        return recon.image
    return np.asarray(recon, dtype=np.float64)


def _mean_on_curve(image: np.ndarray, samples: np.ndarray) -> float:
    # out-of-bounds samples read the slice minimum: leaving the grid never pays
    vals = bilinear_sample(image, samples[:, 1], samples[:, 0],
                           fill=float(image.min()))
    return float(np.mean(vals))


def fitness(recon, path: SpiralPath) -> Fitness:
    """Mean slice intensity under the path; self-crossing costs a penalty.

    The mean over uniform arc samples normalizes by length, so inflating the
    curve to collect more bright pixels does not pay.  The self-intersection
    penalty is ``PENALTY_FACTOR`` times the slice maximum, which dominates
    any achievable mean.  Accepts a ReconSlice or a bare image.
    """
    image = _slice_image(recon)
    score = _mean_on_curve(image, path.samples)
    if not LineString(path.samples).is_simple:
        score -= PENALTY_FACTOR * float(image.max())
    return Fitness(value=score)


@dataclass
class GAConfig:
    """Knobs for the control-point refinement GA."""

    population: int = 64
    generations: int = 200
    mutation_sd: float = 1.5
    elite_count: int = 2
    jitter_box: float = 3.0
    seed: int = 0

    def validate(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 1 <= self.elite_count < self.population:
            raise ValueError("need 1 <= elite_count < population")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.mutation_sd < 0 or self.jitter_box < 0:
            raise ValueError("mutation_sd and jitter_box must be >= 0")


def _evaluate(candidate: np.ndarray, image: np.ndarray, smoothing: float):
    # fit_spline rejects self-crossing paths, so a returned path needs no
    # penalty term and the score equals fitness() on it
    try:
        path = fit_spline(ControlPoints(points=candidate), smoothing)
    except ValueError:
        return -np.inf, None
    score = _mean_on_curve(image, path.samples)
    if not np.isfinite(score):
        return -np.inf, None
    return score, path


def _tournament(scored, rng: np.random.Generator) -> np.ndarray:
    picks = rng.integers(0, len(scored), size=TOURNAMENT_SIZE)
    winner = max(picks, key=lambda idx: scored[idx][0])
    return scored[winner][1]


def optimize(recon, initial: ControlPoints, ga: GAConfig | None = None,
             smoothing: float = 1.0, on_generation=None) -> SpiralPath:
    """Refine control points by a generational GA with elitism.

    The population starts at the seed plus jittered copies (per-point uniform
    jitter in a +-jitter_box square).  Elites survive unchanged, so the best
    fitness never decreases.  Children come from size-3 tournament parents,
    one-point crossover on the point list, and Gaussian per-coordinate
    mutation whose scale anneals by 0.99 each generation.  Candidates whose
    spline fit fails are infeasible; after ``MAX_INFEASIBLE_GENERATIONS``
    straight all-infeasible generations the run aborts.  Deterministic for a
    fixed seed.  ``on_generation(gen, best_fitness, best_path)`` is invoked
    once per generation when given, with the best-so-far values.

    Returns the spline of the best individual ever evaluated.
    """
    ga = ga or GAConfig()
    ga.validate()
    image = _slice_image(recon)
    rng = np.random.default_rng(ga.seed)
    n_points = len(initial)

    population = np.repeat(initial.points[None, :, :], ga.population, axis=0)
    population[1:] += rng.uniform(-ga.jitter_box, ga.jitter_box,
                                  size=(ga.population - 1, n_points, 2))

    best_score = -np.inf
    best_path = None
    infeasible_streak = 0

    for gen in range(ga.generations):
        scored = []
        for cand in population:
            score, path = _evaluate(cand, image, smoothing)
            scored.append((score, cand, path))
        scored.sort(key=lambda sp: sp[0], reverse=True)

        gen_best_score, _, gen_best_path = scored[0]
        if gen_best_path is None:
            infeasible_streak += 1
            if infeasible_streak >= MAX_INFEASIBLE_GENERATIONS:
                raise OptimizationError(
                    f"no feasible path in {infeasible_streak} consecutive "
                    "generations; check the seed control points")
        else:
            infeasible_streak = 0
            if gen_best_score > best_score:
                best_score = gen_best_score
                best_path = gen_best_path
        if on_generation is not None:
            on_generation(gen, best_score, best_path)

        elites = [cand.copy() for _, cand, _ in scored[:ga.elite_count]]
        sd = ga.mutation_sd * MUTATION_ANNEAL ** gen
        children = []
        while len(elites) + len(children) < ga.population:
            pa = _tournament(scored, rng)
            pb = _tournament(scored, rng)
            cut = int(rng.integers(1, n_points))
            child = np.concatenate([pa[:cut], pb[cut:]], axis=0)
            child = child + rng.normal(0.0, sd, size=child.shape)
            children.append(child)
        population = np.stack(elites + children)

    if best_path is None:
        raise OptimizationError("optimization finished without any feasible path")
    return best_path
