"""Simulation of the broadcast stack behind simultaneous broadcast.

Every primitive exists twice: as an ideal reference machine and as the
protocol meant to realize it, so the two can be run on the same script and
their outputs compared.
"""

from .harness import audit, compare, compare_traces, stats
from .kernel import ConfigError, Params, ScenarioScript, Sim, load_scenario, read_trace, run_scenario, write_trace

__all__ = [
    "ConfigError", "Params", "ScenarioScript", "Sim", "audit", "compare", "compare_traces",
    "load_scenario", "read_trace", "run_scenario", "stats", "write_trace",
]
