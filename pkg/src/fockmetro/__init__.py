"""Single-mode bosonic phase estimation: Fock-space simulation, bounds and fits."""

from .errors import (
    DegenerateError,
    DomainError,
    FitError,
    IntegratorError,
    MetrologyError,
    OutOfRangeError,
    TruncationWarning,
    UndefinedPrecisionError,
)
from .fock import (
    OperatorMatrix,
    StateVector,
    TruncationPolicy,
    annihilation_op,
    displacement_op,
    fidelity,
    inner,
    make_coherent,
    make_fock,
    make_mvs,
    number_op,
    parity_op,
    phase_op,
    variance_of,
)
from .dynamics import (
    DecoherenceParams,
    DensityMatrix,
    apply_phase,
    lindblad_evolve,
    phase_from_wait,
)
from .metrology import (
    PrecisionPoint,
    binary_precision,
    db_enhancement,
    fisher_full,
    hl,
    qcrb,
    snl,
)
from .schemes import (
    FringeScan,
    HybridConfig,
    HybridResult,
    hybrid_probability,
    hybrid_scan,
    optimal_probability,
    optimal_scan,
    optimize_hybrid,
)
from .analysis import (
    FringeFit,
    ScalingFit,
    fit_fringe,
    precision_from_fit,
    sample_shots,
    scaling_fit,
)
from .wigner import GridSpec, WignerGrid, default_grid_spec, wigner_grid, wigner_value

__version__ = "0.1.0"
