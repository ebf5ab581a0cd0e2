"""Virtual unwrapping of rolled-sheet phantoms.

Simulated parallel-beam acquisition of a spiral-wound text sheet, axis
calibration from opposing projections, filtered back projection, GA spiral
segmentation, and band texturing that flattens the sheet back to a readable
image.
"""

__version__ = "0.1.0"

from .calibration import AxisCalibration, DifferenceImage, difference_image, find_axis, opposite_index
from .config import AcquisitionConfig, ArtifactPaths, PipelineConfig, apply_overrides
from .errors import (CalibrationError, ConsistencyError, MergeError,
                     MissingStageError, OptimizationError,
                     PathIntersectionError, SpecError, UnfurlError)
from .phantom import (ArchimedeanSpiral, GroundTruth, PhantomSpec, TextTexture,
                      flattened_reference, glyph_texture, rasterize_slice)
from .pipeline import RunManifest, run_stage
from .preprocess import (ProjectionStack, RectifyParams, estimate_i0,
                         extract_slice_sinogram, rectify, to_line_integral)
from .projection import (Geometry, IntensityFrame, Sinogram, acquire_volume,
                         attenuate, radon)
from .recon import (FilterSpec, MaskSpec, ReconSlice, apply_filter, apply_mask,
                    back_project, fbp, fourier_slice_check)
from .segmentation import (ControlPoints, Fitness, GAConfig, SpiralPath,
                           fit_spline, fitness, optimize)
from .unwrap import (TexturedBand, UnwrappedSheet, Volume, merge, mip_flatten,
                     render_preview, texture, z_mip)
