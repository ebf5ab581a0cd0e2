"""Shared fixtures and independent oracles for the test suite.

The oracles here are deliberately written as the obvious, slow thing
(pure-python loops, closed-form formulas, exhaustive enumeration) so a bug in
the library cannot hide in a shared code path.
"""
import numpy as np
import pytest

from unfurl.phantom import PhantomSpec, TextTexture
from unfurl.preprocess import ProjectionStack
from unfurl.projection import Geometry, acquire_volume


# ---------------------------------------------------------------------------
# analytic oracles


def disk_chord(radius, s):
    """Chord length of a unit-density disk: 2*sqrt(R^2 - s^2), 0 outside."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < radius
    out = np.zeros_like(s)
    out[inside] = 2.0 * np.sqrt(radius**2 - s[inside] ** 2)
    return out


def brute_force_back_project(sino_data, geometry, grid_size):
    """Direct double sum over pixels and angles with hand-rolled linear
    interpolation between detector bins.  O(num_angles * grid^2), pure python
    in the inner loop on purpose."""
    c = (grid_size - 1) / 2.0
    det = geometry.detector_coords()
    d0 = det[0]
    spacing = geometry.detector_spacing
    nd = geometry.num_detectors
    angles = geometry.angles()
    out = np.zeros((grid_size, grid_size))
    for row in range(grid_size):
        y = row - c
        for col in range(grid_size):
            x = col - c
            acc = 0.0
            for i in range(len(angles)):
                s = x * np.cos(angles[i]) + y * np.sin(angles[i]) \
                    + geometry.center_offset
                u = (s - d0) / spacing
                j = int(np.floor(u))
                if j < 0 or j >= nd - 1:
                    if j == nd - 1 and abs(u - j) < 1e-12:
                        acc += sino_data[i, j]
                    continue
                frac = u - j
                acc += (1 - frac) * sino_data[i, j] + frac * sino_data[i, j + 1]
            out[row, col] = acc * (geometry.angle_range / geometry.num_angles)
    return out


def spiral_min_distance(spiral, xs, ys):
    """Dense polyline oracle for point-to-spiral distance."""
    phi = np.linspace(0.0, spiral.phi_max, 6000)
    pts = spiral.point(phi)
    d2 = (np.asarray(xs)[:, None] - pts[None, :, 0]) ** 2 \
        + (np.asarray(ys)[:, None] - pts[None, :, 1]) ** 2
    return np.sqrt(d2.min(axis=1))


# ---------------------------------------------------------------------------
# sheet scoring (thresholded cross-correlation against the reference)


def otsu_threshold(image):
    """Histogram threshold maximizing between-class variance (256 bins)."""
    vals = np.asarray(image, dtype=float).ravel()
    lo, hi = float(vals.min()), float(vals.max())
    if hi <= lo:
        return lo
    hist, edges = np.histogram(vals, bins=256, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    w = hist.astype(float)
    total = w.sum()
    omega0 = np.cumsum(w) / total
    mu = np.cumsum(w * centers) / total
    mu_t = mu[-1]
    omega1 = 1.0 - omega0
    valid = (omega0 > 0) & (omega1 > 0)
    sigma_b = np.zeros_like(omega0)
    sigma_b[valid] = (mu_t * omega0[valid] - mu[valid]) ** 2 \
        / (omega0[valid] * omega1[valid])
    return float(centers[int(np.argmax(sigma_b))])


def ncc(a, b):
    """Zero-mean normalized cross-correlation of two equal-size arrays."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt((a * a).sum() * (b * b).sum())
    if denom == 0.0:
        return 0.0
    return float((a * b).sum() / denom)


def sheet_alignment_score(sheet_image, sample_spacing, reference, total_arc,
                          max_lag=8.0, lag_step=0.5):
    """Peak NCC between the thresholded sheet and the reference.

    The sheet's columns sit at absolute arc positions k * sample_spacing along
    the recovered curve; the reference's columns sit at (j + 0.5) / width *
    total_arc along the true curve.  Resampling the binarized sheet at the
    reference positions compares like with like even when the recovered curve's
    arc length differs slightly from the truth.  A small lag sweep absorbs the
    arbitrary arc origin a perturbed or optimized curve may pick up; the peak
    over lags is the score.
    """
    sheet = np.asarray(sheet_image, dtype=float)
    ref = np.asarray(reference, dtype=float)
    binary = (sheet > otsu_threshold(sheet)).astype(float)
    sample_arc = np.arange(sheet.shape[1]) * sample_spacing
    wref = ref.shape[1]
    arc_ref = (np.arange(wref) + 0.5) / wref * total_arc
    best = -1.0
    for lag in np.arange(-max_lag, max_lag + lag_step / 2, lag_step):
        rows = [np.interp(arc_ref + lag, sample_arc, row) for row in binary]
        best = max(best, ncc(np.array(rows), ref))
    return best


# ---------------------------------------------------------------------------
# small-instance factories


def small_spec(grid_size=64, height=8):
    return PhantomSpec(
        sheet_width_px=120,
        sheet_height_px=height,
        inner_radius=5.0,
        layer_spacing=7.0,
        num_turns=2.0,
        sheet_thickness=1.2,
        ink_attenuation=0.8,
        substrate_attenuation=0.3,
        grid_size=grid_size,
    )


def blank_texture(spec):
    return TextTexture(np.zeros((spec.sheet_height_px, spec.sheet_width_px)))


def make_stack(spec, texture, geometry, i0=1.0, noise_sd=0.0, seed=0,
               camera_tilt=0.0):
    frames = acquire_volume(spec, texture, geometry, i0=i0, noise_sd=noise_sd,
                            seed=seed, camera_tilt=camera_tilt)
    return ProjectionStack(frames=frames, geometry=geometry, i0_estimate=i0)


@pytest.fixture(scope="session")
def spec64():
    return small_spec()


@pytest.fixture(scope="session")
def blank64(spec64):
    return blank_texture(spec64)


@pytest.fixture(scope="session")
def stack64(spec64, blank64):
    """Noise-free centered stack of the small phantom: 64 detectors, 90 angles."""
    geo = Geometry(num_angles=90, angle_range=2 * np.pi, num_detectors=64)
    return make_stack(spec64, blank64, geo)
