"""Scheduling crowdsourcing tasks over workers reached through opportunistic contacts."""

from .core import Instance, Schedule, Task, Worker, completion_times, smith_order, weighted_completion
from .greedy import TieRule, lrf_schedule
from .lp_relax import build_grid, build_lp, solve_instance, solve_lp
from .rounding import dis_schedule, expected_wct, mdis_schedule, ris_round

__all__ = [
    "Instance", "Schedule", "Task", "Worker", "TieRule",
    "completion_times", "smith_order", "weighted_completion", "lrf_schedule",
    "build_grid", "build_lp", "solve_instance", "solve_lp",
    "ris_round", "dis_schedule", "mdis_schedule", "expected_wct",
]
