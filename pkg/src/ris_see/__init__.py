"""Secrecy energy efficiency maximization for an RIS-aided uplink.

Library layers: exact system model (`model`), channel generation
(`channels`), concave surrogates (`surrogates`), fractional-programming
machinery (`fractional`), the two sequential optimizers (`ris_opt`,
`power_opt`), LMMSE filters (`filters`), the alternating orchestrator and
baselines (`orchestrator`) and the campaign runner (`experiments`, `cli`).
"""

from .model import (Allocation, ChannelSet, PerfReport, Receiver, RisMode,
                    SystemParams, check_feasibility, effective_channel,
                    noise_covariance, perf_report, ris_rf_power, secrecy_rate,
                    secrecy_rate_unclamped, see, sinr, sinr_all, total_power)
from .channels import (GeometryConfig, ScenarioGeometry, dbm_to_watts,
                       draw_channels, noise_power_watts, pathloss_gain,
                       place_nodes, watts_to_dbm)
from .surrogates import (DegenerateExpansionError, PowerSurrogateState,
                         SurrogateCoeffs, build_power_state,
                         concave_secrecy_surrogate, log_ratio_lower_bound,
                         power_surrogate, rate_surrogate_coeffs,
                         trace_linearization)
from .fractional import (DomainKind, FeasibleSet, FractionalProblem,
                         SolverReport, concave_subproblem_solve,
                         dinkelbach_maximize, project_feasible_gamma)
from .filters import lmmse_filters
from .ris_opt import optimize_gamma
from .power_opt import optimize_powers
from .orchestrator import (ConvergenceTrace, RunMode, alternating_maximize,
                           baseline_random_uniform, ee_no_eve,
                           initial_allocation, ssr_maximize)
from .experiments import (ExperimentConfig, SweepSpec, build_system_params,
                          load_config, run_campaign, summarize)

__version__ = "0.1.0"
