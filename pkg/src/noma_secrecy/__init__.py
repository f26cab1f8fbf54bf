"""Secrecy analysis and learning-based power allocation for SWIPT
cooperative NOMA relaying with an energy-harvesting eavesdropper.

The package has three layers:

* physics: channel sampling and per-realization SINR formulas
  (:mod:`noma_secrecy.channel`), secrecy rate and intercept probability by
  Monte Carlo and by quadrature (:mod:`noma_secrecy.secrecy`,
  :mod:`noma_secrecy.specfun`);
* allocation: the grid-search oracle, the random baseline, and a
  from-scratch neural network, all behind a scikit-learn estimator API
  (:mod:`noma_secrecy.allocation`, :mod:`noma_secrecy.network`,
  :mod:`noma_secrecy.estimators`, :mod:`noma_secrecy.datasets`);
* experiments: a CSV-emitting command-line interface
  (:mod:`noma_secrecy.cli`).
"""

from .allocation import (
    ObjectiveConfig,
    OptResult,
    far_rate_objective,
    near_rate,
    oracle_search,
    random_allocation,
)
from .channel import (
    ChannelRealization,
    PowerAllocation,
    PowerSplit,
    SinrSet,
    SystemParams,
    compute_sinrs,
    db_to_linear,
    linear_to_db,
    sample_channels,
)
from .datasets import Dataset, generate_dataset
from .estimators import GridOracleAllocator, MlpAllocationRegressor, RandomAllocator
from .network import Mlp, TrainConfig
from .secrecy import (
    InterceptEstimate,
    QuadratureConfig,
    build_discrepancy_report,
    cdf_x,
    intercept_event,
    intercept_probability_analytical,
    intercept_probability_mc,
    pdf_y,
    secrecy_rate_df,
)
from .specfun import (
    SpecFunError,
    SpecFunResult,
    exp_integral_ei,
    regularized_gamma_q,
    upper_incomplete_gamma,
)

__version__ = "0.1.0"
