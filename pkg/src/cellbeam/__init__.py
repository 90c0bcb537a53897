"""Minimum-power multi-cell downlink beamforming and power control.

The library solves the power-minimization beamforming problem for networks
described only by long-term channel statistics (spatial correlation
matrices): a fixed-point iteration on the Lagrange multipliers drives
per-cell beamformer recovery and per-user power control, and a virtual-time
simulator runs the same pipeline as a distributed protocol over a lossy,
delaying backhaul.
"""

__version__ = "0.1.0"

from . import asyncsim, channel, dualsolve, feasibility, hermlin, pipeline, primal
from .channel import LayoutSpec, Scenario, generate_scenario, load_scenario, save_scenario
from .dualsolve import DualWorkspace, sync_solve
from .pipeline import solve_scenario

__all__ = [
    "DualWorkspace",
    "LayoutSpec",
    "Scenario",
    "asyncsim",
    "channel",
    "dualsolve",
    "feasibility",
    "generate_scenario",
    "hermlin",
    "load_scenario",
    "pipeline",
    "primal",
    "save_scenario",
    "solve_scenario",
    "sync_solve",
    "__version__",
]
