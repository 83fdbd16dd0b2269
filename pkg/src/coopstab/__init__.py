"""Stability class and non-negative steady states of linear cooperative
systems dm/dt = A m, decided block-by-block on the strongly connected
components of the dependence graph."""

__version__ = "0.1.0"

from .condensation import (
    Block,
    Condensation,
    Coupling,
    condense,
    extract_coupling,
    to_dot,
    upstream_reachability,
)
from .errors import (
    BadBlockOrder,
    CoopStabError,
    DuplicateEntry,
    GapTooSmall,
    IndexOutOfRange,
    InfeasibleSpec,
    NegativeOffDiagonal,
    NegativeSteadyStateEntry,
    NoConvergence,
    NonSquare,
    NotMarginallyStable,
    ParseError,
    SingularSubCriticalSolve,
    SuperCriticalPresent,
    TooLargeForDense,
    TooManyBlocks,
    UnknownLabel,
    ValidationError,
    ZeroWeightEdge,
)
from .oracle import (
    DenseVerdict,
    GeneratorSpec,
    LimitCheckResult,
    dense_verdict,
    expm_limit_check,
    generate,
    generate_compartmental,
    generate_marginally_stable,
    generate_with_plan,
    random_critical_matrix,
    random_metzler,
    simulate,
    spectrum_match_error,
)
from .spectral import (
    BlockClass,
    BlockSpectrum,
    ClassIndexSets,
    SpectralOptions,
    analyze_all_blocks,
    class_index_sets,
    classify,
    dominant_eigenpair,
)
from .stability import (
    BlockRole,
    CriticalPath,
    StabilityReport,
    SteadyStateBasis,
    SuperCriticalBlock,
    Verdict,
    find_traps,
    full_analysis,
    nullspace_residual,
    path_sum_matrix,
    steady_state_basis,
    steady_state_by_path_sum,
    trivial_blocks,
    verdict,
)
from .system import (
    CooperativeSystem,
    from_dense,
    is_compartmental,
    load_edge_list_json,
    load_matrix_market,
    state_vector,
    to_edge_list_json,
    to_matrix_market,
    validate,
)
