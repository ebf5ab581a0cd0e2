"""Unwrapped-sheet quality versus sensor noise, end to end.

Runs the full pipeline once per noise level and scores the flattened sheet
against the phantom's flattened reference: the sheet is binarized (histogram
threshold), resampled at the reference's arc positions, and correlated, with
a small lag sweep absorbing the arc origin.  This is the virtual analogue of
checking how much sensor noise the recovered text survives.
"""
import argparse
import contextlib
import io
import shutil
import time
from pathlib import Path

import numpy as np

from unfurl.cli import main as cli_main
from unfurl.storage import load_array, load_sheet


def binarize(image: np.ndarray) -> np.ndarray:
    # 256-bin histogram threshold maximizing between-class variance
    vals = image.ravel()
    lo, hi = float(vals.min()), float(vals.max())
    if hi <= lo:
        return np.zeros_like(image)
    hist, edges = np.histogram(vals, bins=256, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    w = hist.astype(float)
    omega0 = np.cumsum(w) / w.sum()
    mu = np.cumsum(w * centers) / w.sum()
    omega1 = 1.0 - omega0
    valid = (omega0 > 0) & (omega1 > 0)
    sigma_b = np.zeros_like(omega0)
    sigma_b[valid] = (mu[-1] * omega0[valid] - mu[valid]) ** 2 \
        / (omega0[valid] * omega1[valid])
    return (image > centers[int(np.argmax(sigma_b))]).astype(float)


def ncc(a: np.ndarray, b: np.ndarray) -> float:
    a = a.ravel() - a.mean()
    b = b.ravel() - b.mean()
    denom = np.sqrt((a * a).sum() * (b * b).sum())
    return float((a * b).sum() / denom) if denom else 0.0


def sheet_correlation(root: Path, max_lag: float = 8.0) -> float:
    sheet = load_sheet(root / "sheet")
    truth, meta = load_array(root / "truth_reference.f32")
    binary = binarize(sheet.image)
    sample_arc = np.arange(binary.shape[1]) * sheet.provenance["spacing"]
    wref = truth.shape[1]
    arc_ref = (np.arange(wref) + 0.5) / wref * meta["arc_length"]
    best = -1.0
    for lag in np.arange(-max_lag, max_lag + 0.25, 0.5):
        rows = [np.interp(arc_ref + lag, sample_arc, row) for row in binary]
        best = max(best, ncc(np.array(rows), truth))
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise", type=float, nargs="+",
                    default=[0.0, 0.005, 0.01, 0.02, 0.05])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", default="runs/noise_sweep",
                    help="parent directory for the per-level runs")
    ap.add_argument("--keep", action="store_true",
                    help="keep per-level artifacts instead of deleting them")
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="SECTION.KEY=VALUE",
                    help="extra config overrides forwarded to every run")
    args = ap.parse_args()

    parent = Path(args.output)
    extra = [f for o in args.overrides for f in ("--set", o)]
    print(f"{'noise_sd':>9} {'correlation':>12} {'runtime s':>10}")
    for noise_sd in args.noise:
        root = parent / f"noise_{noise_sd:g}"
        t0 = time.perf_counter()
        with contextlib.redirect_stdout(io.StringIO()):
            rc = cli_main(["all", "--output", str(root),
                           "--seed", str(args.seed),
                           "--set", f"acquisition.noise_sd={noise_sd}"] + extra)
        if rc != 0:
            return rc
        score = sheet_correlation(root)
        print(f"{noise_sd:>9.3f} {score:>12.4f} {time.perf_counter() - t0:>10.1f}")
        if not args.keep:
            shutil.rmtree(root)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
