"""Heat semigroup of ``-Delta + (-Delta)^sigma``, blow-up criteria and a semilinear solver."""

__version__ = "0.1.0"

from .criterion import (
    CriterionProblem,
    CriterionVerdict,
    FujitaReport,
    Status,
    blowup_time_upper_bound,
    classify_analytic,
    classify_numeric,
    condition_i_integral,
    fujita_threshold,
    gamma_fn,
    integrand,
)
from .grid import GridField, GridSpec, gaussian_bump, smooth_plateau
from .kernel import kernel_convolution_form, kernel_from_symbol, verify_bounds, verify_p1, verify_semigroup_property
from .nonlinearity import (
    Constant,
    CustomTable,
    ExpT,
    LogPower,
    Power,
    PowerSum,
    PowerSumT,
    PowerT,
    check_conditions_1_5,
    majorant_closed_form,
    majorant_numeric,
    minorant_closed_form,
    minorant_numeric,
    phi,
)
from .semigroup import apply_semigroup, fit_decay_exponent, supnorm_decay_curve
from .solver import EvolutionConfig, GaussianData, PlateauData, FileData, evolve, picard_iterate, step_exponential_euler
