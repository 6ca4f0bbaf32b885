"""Green-function asymptotics for finite-support Markov-additive
processes on Z^d x {1..p}: structural validation, Fourier/Laplace
spectra, changes of section, the spectral-radius boundary with its Doob
transforms, and three independent Green-function methods checked against
the asymptotic equivalent."""

from .boundary import (
    BoundaryPoint,
    BoundaryTrace,
    DoobTransform,
    RhoEvaluation,
    boundary_point,
    boundary_trace,
    doob_transform,
    ray_to_boundary,
    rho_eval,
    rho_value,
    unit_directions,
)
from .errors import (
    MaddError,
    NumericError,
    PreconditionError,
    ResourceError,
    SpecError,
)
from .green import (
    AsymptoticCoefficient,
    ComparisonTable,
    GreenEstimate,
    asymptotic_coefficient,
    asymptotic_green,
    compare,
    default_mc_horizon,
    doob_conjugation_residual,
    green_mc,
    green_mc_many,
    green_resolvent,
    green_resolvent_undamped,
    green_series,
    nearest_lattice_point,
    rotation_to_e1,
)
from .process import (
    MomentData,
    ProcessSpec,
    ValidationReport,
    moments,
    require_assumptions,
    stationary_distribution,
    validate,
)
from .sections import (
    EnergyMatrix,
    SectionMatrix,
    SectionedProcess,
    apply_section,
    appropriate_section,
    energy_matrix,
)
from .transforms import (
    DerivativeCheck,
    PerronTriple,
    ScanReport,
    SpectralDecomposition,
    convolution_power,
    fourier,
    fourier_many,
    k_derivative_check,
    laplace,
    leading_decomposition,
    perron_triple,
    spectral_scan,
)

__version__ = "0.1.0"
