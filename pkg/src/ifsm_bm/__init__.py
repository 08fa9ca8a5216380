"""Brownian-motion paths as fixed points of IFSM operators with wavelet-type maps."""

from .collage import (
    CollageQp,
    assemble,
    assemble_nonoverlapping,
    collage_distance,
    evaluate_form,
    exact_refinement,
)
from .generators import (
    FixedStream,
    GaussianStream,
    KacSiegertBasis,
    ZeroStream,
    euler_bm,
    gaussian_stream,
    kac_siegert_bm,
    truncated_variance_at_one,
)
from .maps import (
    AffineMap,
    family_descriptor,
    is_nonoverlapping,
    linear_index,
    parse_family_descriptor,
    wavelet_family,
    wavelet_index,
    wavelet_level,
    wavelet_map,
)
from .operator import (
    ConvergenceError,
    GreyMap,
    IfsmSystem,
    NotContractiveError,
    apply_operator,
    collage_bound,
    contractivity_factor,
    fixed_point,
    fixed_point_continuity_bound,
    iterate_operator,
)
from .path import (
    GridError,
    SampledPath,
    inner_product,
    l1_norm,
    l2_distance,
    l2_norm,
    pullback,
    read_csv,
    write_csv,
)
from .pipeline import (
    BaseSpec,
    FixedPointOptions,
    RunManifest,
    SolverOptions,
    diagnostics,
    fit_ifsm,
    ifsm_bm,
    replay,
    run_pipeline,
    self_similarity_check,
)
from .qp import FeasibleRegion, InfeasibleError, SolveReport, solve, solve_separable

__version__ = "0.1.0"
