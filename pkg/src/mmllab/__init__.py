"""mmllab: minimax model learning for batch off-policy evaluation and
optimization, with exactly solvable tabular and linear-quadratic testbeds."""

from ._backend import BACKEND, available_backends
from .ci import CiResult, ci_bounds, ci_loss, ci_loss_exact
from .classes import (
    ClassKind,
    FunctionClassHandle,
    LinearClass,
    enumerate_adversaries,
    enumerate_tabular_ball,
    solve_linear_closed_form,
    solve_tabular,
    tabular_model_from_coefficients,
)
from .losses import (
    AdversaryPair,
    IdentityVariant,
    LossKind,
    LossValue,
    exact_adversary_pair,
    mle_loss,
    mle_loss_exact,
    mml_loss,
    mml_loss_exact,
    ope_error_identity,
    residual_mml_loss,
    vaml_loss,
    vaml_loss_exact,
)
from .lqr import (
    LqrOccupancyMixture,
    LqrSelectionRow,
    LqrSystem,
    LqrValueQuadratic,
    lqr_coincide_argmin,
    lqr_literal_return_mc,
    lqr_mle_loss,
    lqr_mml_loss,
    lqr_model_grid,
    lqr_model_selection,
    lqr_occupancy,
    lqr_policy_value,
    lqr_vaml_loss,
    lqr_value,
)
from .mdp import (
    Dataset,
    OccupancyMeasure,
    Policy,
    SupportViolation,
    TabularMdp,
    TransitionModel,
    ValueFunction,
    WeightFunction,
    behavior_data_distribution,
    density_ratio,
    evaluate_policy,
    generate_dataset,
    monte_carlo_return,
    random_mdp,
    random_model,
    random_policy,
    sample_transitions,
    solve_occupancy,
    solve_value_function,
)
from .minimax import LossContext, ModelSelection, minimize_finite, misspec_gap
from .pipelines import (
    MorelReport,
    OpeReport,
    OpoReport,
    PessimisticMdp,
    build_pessimistic_mdp,
    exact_ope_adversaries,
    exact_opo_adversaries,
    plan_optimal,
    run_ope,
    run_opo,
    run_opo_morel,
)
from .rkhs import (
    KernelKind,
    KernelSpec,
    median_bandwidth,
    rkhs_max_mml_sq,
    rkhs_max_vaml,
)

__version__ = "0.1.0"
