"""Route and collection-duration scheduling for UAV data collection from buffered access points."""

__version__ = "0.1.0"

from .instance import (  # noqa: E402
    AccessPoint, EnergyParams, Instance, InstanceFormatError, Layout, Location, Profile, RadioParams,
    UavParams, generate_instance, load_instance, parse_instance, save_instance, write_instance,
)
from .physics import arc_cost, flight_slots, hover_power, overflow_deadline, propulsion_power, transmission_rate  # noqa: E402
from .schedule import (  # noqa: E402
    Evaluation, Schedule, ScheduleError, build_queue, evaluate, feasibility_report, request_slot, simulate_slots,
)
from .mdp import DurationAssignment, solve_dcdsp  # noqa: E402
from .ils import SolverConfig, SolverResult, solve  # noqa: E402
from .baselines import OracleResult, brute_force, greedy_deadline, uniform_duration  # noqa: E402
from .milp import build_model, read_solution, write_lp  # noqa: E402
from .stats import wilcoxon_rank_sum  # noqa: E402
from .bench import BenchRecord, StatReport, metrics, plot_data, run_bench  # noqa: E402
from .estimators import BruteForce, GreedyDeadline, ILSMDPSolver, UniformDuration  # noqa: E402

__all__ = [
    "AccessPoint", "EnergyParams", "Instance", "InstanceFormatError", "Layout", "Location", "Profile",
    "RadioParams", "UavParams", "generate_instance", "load_instance", "parse_instance", "save_instance",
    "write_instance", "arc_cost", "flight_slots", "hover_power", "overflow_deadline", "propulsion_power",
    "transmission_rate", "Evaluation", "Schedule", "ScheduleError", "build_queue", "evaluate",
    "feasibility_report", "request_slot", "simulate_slots", "DurationAssignment", "solve_dcdsp",
    "SolverConfig", "SolverResult", "solve", "OracleResult", "brute_force", "greedy_deadline",
    "uniform_duration", "build_model", "read_solution", "write_lp", "wilcoxon_rank_sum", "BenchRecord",
    "StatReport", "metrics", "plot_data", "run_bench", "BruteForce", "GreedyDeadline", "ILSMDPSolver",
    "UniformDuration",
]
