"""Simulation and power-control policies for a link whose transmitter and
receiver both run on harvested energy."""

from .bounds import LinkParams, genie_throughput_oracle, throughput_upper_bound
from .config import ConfigError
from .energy import ContractViolation, EnergyLedger, NodeEnergyState
from .engine import SimConfig, Trace, run_link, run_reference, run_sweep
from .experiments import PRESETS, ExperimentPreset, run_experiment
from .harvest import HarvestProcess, bernoulli
from .metrics import SimSummary, energy_balance_residual, mean_se, throughput_gap_vs_bound
from .policies import UncoordPattern, calibrate_uncoordinated

__all__ = [
    "LinkParams",
    "genie_throughput_oracle",
    "throughput_upper_bound",
    "ConfigError",
    "ContractViolation",
    "EnergyLedger",
    "NodeEnergyState",
    "SimConfig",
    "Trace",
    "run_link",
    "run_reference",
    "run_sweep",
    "ExperimentPreset",
    "PRESETS",
    "run_experiment",
    "HarvestProcess",
    "bernoulli",
    "SimSummary",
    "energy_balance_residual",
    "mean_se",
    "throughput_gap_vs_bound",
    "UncoordPattern",
    "calibrate_uncoordinated",
]

__version__ = "0.1.0"
