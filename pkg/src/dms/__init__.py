"""ABSF-based inter-cell interference coordination: distributed multi-traffic
scheduling games, a lightweight supervisor, exact tiny-instance oracles, and
an experiment harness."""

__version__ = "0.1.0"

from .errors import CapacityError, ConfigurationError, DmsError, InfeasibleDemandError
from .radio import (ChannelModel, LinkGainMatrix, McsTable, Topology, best_rate,
                    compute_gains, default_mcs_table, generate_hex_topology, sinr)
from .rates import PhysicalRateModel, TableRateModel
from .scheduling import (AbsfPattern, Action, ActionProfile, SolverLimits,
                         demands_from_rate_mbps, is_single_step, pattern_from_action)
from .gbr_local import (GbrLocalInput, GbrLocalSolution, best_response, cost_f,
                        served_traffic, single_step_best_response)
from .gbr_game import GbrGameResult, is_saturation_profile, play_round, run_gbr_game
from .be_local import BeLocalInput, BeLocalSolution, be_maxmin, mean_user_volume
from .be_game import BeGameResult, run_be_game
from .supervisor import AimdState, SqueezeResult, aimd_step, run_dms_epochs, time_squeeze
from .oracle import (CentralBeSolution, CentralGbrSolution, brute_force_local,
                     solve_be_central, solve_gbr_central)
from .metrics import OverheadParams, crossover_users, overhead_bits, rate_cdf, time_utilization_index
from .scenario import Instance, Scenario
from .config import ScenarioConfig
