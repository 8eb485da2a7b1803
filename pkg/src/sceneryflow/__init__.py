"""Zoom dynamics of digit-defined measures.

Build measures on [0, 1] from digit statistics, zoom into them along
scaling orbits, estimate the pure-point spectrum of the zoom flow and the
relative phases of its eigenfunctions, and test multiscale singularity
between (possibly smoothly distorted) measures. A compiled digit-walk
kernel accelerates the hot queries; a NumPy fallback with bit-identical
output is selected automatically when the extension is unavailable.
"""

from . import kernels
from .diffeos import DiffeoSpec, gentle_cubic, gentle_quadratic
from .errors import (
    ConfigError,
    DomainError,
    InsufficientDigitsError,
    LowSignalError,
    NormalizationError,
    OutsideSupportError,
    ResolutionError,
    SceneryflowError,
)
from .functionals import TestFunctional, default_functionals
from .grids import (
    GridMeasure,
    affine_rescale,
    convolve,
    from_model,
    local_dimension_estimate,
    overlap_statistic,
    pushforward,
    restrict_normalize,
    wasserstein1,
)
from .models import DigitModel, Word, point_from_digits, xi, xi_k
from .phase import (
    PhaseMeasure,
    PhaseParams,
    PhaseSample,
    circular_stats,
    circular_w1,
    phase_at_point,
    phase_measure,
    pushforward_phase_check,
    relative_phase,
    rotation_aligned_w1,
)
from .prediction import (
    PredictionMeasure,
    TwoSidedPath,
    intertwine_check,
    prediction_dimension_check,
    prediction_measure,
    sample_path,
    superposition_check,
)
from .scenery import (
    EmpiricalSceneryDistribution,
    PointSpec,
    SceneryOrbit,
    diffeo_shift_check,
    maker_average,
    sample_point,
    scenery,
    scenery_orbit,
)
from .singularity import SingularityReport, convolution_dimension_probe, overlap_profile
from .spectral import (
    SpectrumScan,
    eigenvalue_present,
    fourier_average,
    peak_report,
    spectrum_scan,
)

__version__ = "0.1.0"

backend_name = kernels.backend_name
