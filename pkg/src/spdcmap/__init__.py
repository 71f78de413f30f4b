"""Joint-spectrum simulation and analysis of polarization entanglement in
femtosecond-pumped type-II SPDC."""

from .analysis import (
    GaussianJointFit,
    PolarizerScan,
    SinusoidFit,
    VisibilityFit,
    entropy_map,
    fit_gaussian2d,
    fit_sinusoid,
    visibility_gamma_maps,
)
from .exceptions import (
    DegenerateMarginalError,
    FitError,
    InconsistentInputsError,
    InfeasibleError,
    SpdcMapError,
    UndefinedStateError,
    ValidationError,
)
from .polarization import (
    AnalyzerSetting,
    TwoPathState,
    coincidence_prob,
    entanglement_entropy,
    gamma_max,
    visibility_45,
)
from .simulate import ScanCube, SourceConfig, expected_cube, rate_map, sample_counts, sample_cube
from .spectral_model import (
    PAPER_HV_MODEL,
    GaussianJointModel,
    SpectralMap,
    WavelengthGrid,
    gaussian_eval,
    marginal_fwhm,
    mirror_path,
    path_amplitudes,
    validate,
)
from .vfilter import (
    BandwidthSelector,
    FilterProfile,
    TradeoffCurve,
    correct_fourphoton,
    filtered_scan,
    optimize_filter,
    tradeoff_curve,
)

__version__ = "0.1.0"
