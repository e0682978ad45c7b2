"""Hilbert space averages of transition probabilities, checked by Monte Carlo."""

__version__ = "0.1.0"

from .closedform import (  # noqa: F401
    LambdaCoefficients,
    MomentReport,
    approx_ha_full_nonuniform,
    ha_fixed_overlap,
    ha_fixed_overlap_both,
    ha_fixed_overlap_both_unitary,
    ha_fixed_overlap_deformed,
    hv_fixed_overlap,
    hv_fixed_overlap_both_unitary,
    hv_fixed_overlap_deformed,
    kumaraswamy_moments,
    lambda_coefficients,
    moment_product,
)
from .ensembles import (  # noqa: F401
    DensityOperator,
    Deformation,
    deformation_from,
    effective_dimension,
    purity,
    solve_reimann_rho,
)
from .kicked_ising import (  # noqa: F401
    FloquetOperator,
    KicParams,
    build_floquet,
    build_magnetization,
    form_factor,
    trace_power,
)
from .montecarlo import (  # noqa: F401
    EstimatorResult,
    HistogramResult,
    estimate_fixed_overlap,
    estimate_generic,
    histogram_transition,
)
from .statespace import (  # noqa: F401
    OverlapSpec,
    PureState,
    deformed_fixed_overlap_state,
    fixed_overlap_state,
    orthogonal_complement_sample,
    sample_haar,
    transition_probability,
)
