"""Expected runtime of randomized algorithms under fixed cut-off restarts.

Quantile-based analysis of when restarting helps, the optimal restart
quantile for log-normal, generalized Pareto and Weibull runtimes (with
scale and location wrappers), and a seeded Monte Carlo simulator for
checking the analytic results.
"""

from .analysis import (
    NoImprovementError,
    OptimalRestart,
    RegionScan,
    Status,
    UsefulnessVerdict,
    expected_runtime_restarted,
    optimal_condition_residual,
    optimal_restart,
    quick_median_test,
    region_scan,
    restarted_mean_curve,
    usefulness_at,
    usefulness_at_tail,
    usefulness_margin,
    usefulness_verdict,
)
from .distributions import (
    Distribution,
    DomainError,
    GeneralizedPareto,
    InfiniteMeanError,
    LogNormal,
    SpecError,
    Weibull,
    gen_pareto,
    lognormal,
    weibull,
)
from .simulation import (
    FixedCutoff,
    InvalidCutoffError,
    Luby,
    NoRestart,
    SimulationConfig,
    SimulationResult,
    compare_policies,
    luby_sequence,
    simulate,
)

__version__ = "0.1.0"
