"""Switched feedback-linearizing control with an energy-saving and a dexterous mode.

Library layout:

- ``flc``: plant-agnostic switched feedback-linearization core
- ``mecanum``: the omnidirectional vehicle model and its decoupling blocks
- ``baselines``: the naive per-mode controllers the unified design replaces
- ``references``: desired trajectories with exact derivatives
- ``engine``: deterministic closed-loop simulation and log analysis
- ``config``, ``report``, ``cli``: scenario files, CSV/metrics/figures, commands
- ``bridge``: live operator session over websockets
"""

from .baselines import BaselineGains, naive_dexterous, naive_energy_saving
from .engine import (NoiseState, ScenarioStepper, SimLog, SwitchSchedule,
                     decay_rate_estimate, default_gain_set, noise_step, rk4_step,
                     run_scenario)
from .flc import (GainSet, InteractionBlocks, RelativeDegree, SingularInteractionMatrix,
                  VirtualInput, closed_loop_error_poles, compose_drift,
                  compose_interaction_matrix, compose_virtual, control_input,
                  tracking_virtual_input)
from .mecanum import (ControlInput, EnergyMeter, ExtendedState, OutputStack,
                      det_sigma, heading_of_velocity, interaction_blocks,
                      output_stack, power, state_derivative)
from .references import (ReferenceTrajectory, circle_reference, line_reference,
                         polynomial_reference)

__version__ = "0.1.0"

__all__ = [
    "BaselineGains", "naive_dexterous", "naive_energy_saving",
    "NoiseState", "ScenarioStepper", "SimLog", "SwitchSchedule",
    "decay_rate_estimate", "default_gain_set", "noise_step", "rk4_step", "run_scenario",
    "GainSet", "InteractionBlocks", "RelativeDegree", "SingularInteractionMatrix",
    "VirtualInput", "closed_loop_error_poles", "compose_drift",
    "compose_interaction_matrix", "compose_virtual", "control_input",
    "tracking_virtual_input",
    "ControlInput", "EnergyMeter", "ExtendedState", "OutputStack",
    "det_sigma", "heading_of_velocity", "interaction_blocks",
    "output_stack", "power", "state_derivative",
    "ReferenceTrajectory", "circle_reference", "line_reference", "polynomial_reference",
    "__version__",
]
