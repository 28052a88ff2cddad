"""Dynamic scheduling and power control for uplink Massive MIMO with random arrivals."""

from .system_model import (
    SystemConfig, SystemModel, UserProfile, beta_from_snr, gamma_of, rate_bits, sinr_mrc,
    reference_users,
)
from .power_control import (
    PowerAllocation, SolverError, WsrInstance, oracle_wsr, solve_mmf, solve_msr, solve_wsr,
)
from .queueing import ArrivalProcess, QueueState, draw_arrivals, update_queues
from .dsa_controller import (
    ControlDecision, UtilitySpec, admit, decide_slot, drift_penalty_bound, max_min_utility,
    solve_auxiliary, sum_utility,
)
from .engine import MetricsSeries, Policy, delay_metrics, emit_csv, run, stability_probe

__version__ = "0.1.0"
