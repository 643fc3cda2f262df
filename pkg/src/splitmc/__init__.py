"""Split Gibbs sampling for composite log-concave targets.

Provides the two-block Gibbs sweep with exact conditional samplers, the
closed-form tolerance/mixing-time planners, non-asymptotic bias bounds,
distance diagnostics, optimizer twins (alternating minimization, ADMM) and
a batch experiment CLI.
"""

from . import bias, conditionals, engine, errors, metrics, model, numerics, planner, zoo
from .errors import (
    AcceptanceStall,
    DimensionMismatch,
    EpsilonOutOfRange,
    NonConvergence,
    NotCentered,
    NotSmooth,
    NotStronglyConvex,
    QuadratureFailure,
    SingularGram,
    SingularModel,
    SplitMCError,
    TooFewSamples,
    UnsupportedModel,
)
from .conditionals import (
    RejectionReport,
    ThetaConditional,
    expected_proposals_bound,
    sample_theta,
    sample_z_closed_form,
    sample_z_rejection,
)
from .engine import (
    ChainState,
    RunReport,
    SamplerConfig,
    admm_solve,
    am_solve,
    extended_langevin_step,
    read_trace,
    run_chain,
    sgs_sweep,
    sweep_conditional_modes,
    ula_step,
    initial_state,
)
from .model import (
    Minimizer,
    ModelConstants,
    Potential,
    SplitFactor,
    SplitModel,
    center_model,
    find_minimizer,
    make_quadratic_factor,
    model_constants,
    regularize_model,
)
from .planner import Plan, k_sgs, plan_tv_multi, plan_tv_nonstrongly, plan_tv_single, plan_w1_single
from .bias import BiasBound, pi_rho_closed_form, tv_bound_lipschitz, tv_bound_strongly_convex, w1_bound_single
from .metrics import ToyParams, ar1_kernel_t, binned_tv, empirical_w1_1d
from .zoo import build_model, model_names

__version__ = "0.1.0"
