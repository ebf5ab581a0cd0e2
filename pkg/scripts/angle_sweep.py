"""Reconstruction error of the analytic disk as the angle count grows.

Prints the relative RMSE inside 0.8R for each angle count; the error should
fall monotonically as angles double.  Optionally writes the reconstructions
as 16-bit PNGs for visual comparison.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from unfurl.projection import Geometry, radon
from unfurl.raster import disk, display_normalize, grid_center
from unfurl.recon import FilterSpec, fbp
from unfurl.storage import save_image_png16


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=256)
    ap.add_argument("--radius", type=float, default=100.0)
    ap.add_argument("--angles", type=int, nargs="+",
                    default=[25, 50, 100, 200, 400, 800])
    ap.add_argument("--cutoff", type=float, default=1.0,
                    help="ram-lak cutoff as a fraction of Nyquist")
    ap.add_argument("--save-pngs", metavar="DIR",
                    help="write per-count reconstruction PNGs here")
    args = ap.parse_args()

    img = disk(args.grid, args.radius)
    c = grid_center(args.grid)
    yy, xx = np.mgrid[0:args.grid, 0:args.grid].astype(np.float64)
    m = np.hypot(xx - c, yy - c) <= 0.8 * args.radius

    print(f"{'angles':>8} {'rel RMSE':>10} {'radon s':>9} {'fbp s':>7}")
    for num_angles in args.angles:
        geo = Geometry(num_angles=num_angles, angle_range=2 * np.pi,
                       num_detectors=args.grid)
        t0 = time.perf_counter()
        sino = radon(img, geo)
        t1 = time.perf_counter()
        rec = fbp(sino, args.grid, FilterSpec(kind="ram_lak", cutoff=args.cutoff))
        t2 = time.perf_counter()
        rmse = float(np.sqrt(np.mean((rec.image[m] - img[m]) ** 2)))
        print(f"{num_angles:>8} {rmse:>10.5f} {t1 - t0:>9.2f} {t2 - t1:>7.2f}")
        if args.save_pngs:
            out = Path(args.save_pngs)
            out.mkdir(parents=True, exist_ok=True)
            save_image_png16(out / f"disk_{num_angles:04d}.png",
                             display_normalize(rec.image))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
