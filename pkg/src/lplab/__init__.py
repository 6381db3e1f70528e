"""lplab: a laboratory for state-dependent local projections.

Simulates quadratic (vector) autoregressions, evaluates exact and
population impulse responses for the usual local-projection designs,
measures specification-to-truth distances, and runs HAC-based inference.
"""

from .distance import (
    analytic_loss_s,
    analytic_loss_u,
    binned_distance,
    distance_report,
    per_obs_delta,
    unconditional_distance,
    xi_estimate,
)
from .empirical import EmpiricalConfig, hp_filter, load_csv, run_empirical
from .irf import (
    SpecKind,
    car,
    ccar_region,
    ccar_slice,
    cmr,
    girf,
    irf_value,
    kp_weight,
    pop_irf,
    qvar_car,
    qvar_linear_pop_irf,
)
from .models import (
    HorizonCoeffs,
    QarMoments,
    QarParams,
    QvarParams,
    asym_m,
    horizon_coeffs,
    nu_m,
    qar_moments,
    stationary_state_variance,
    unvech,
    vech,
)
from .regression import (
    DesignSpec,
    IrfEstimate,
    RegressionFit,
    build_design,
    counterexample_params,
    default_bandwidth,
    ehw_vcov,
    fit_lp,
    hac_lrv,
    irf_ci,
    ols,
    score_lag1_autocov,
)
from .simulate import (
    SimulatedPath,
    car_oracle,
    conditional_state_sampler,
    qvar_car_oracle,
    simulate_qar,
    simulate_qvar,
)

__version__ = "0.1.0"
