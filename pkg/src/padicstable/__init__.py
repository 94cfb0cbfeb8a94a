"""Simulation and series toolkit for radial alpha-stable processes on the p-adic numbers."""

from .analytic import (
    RadialLevySpec,
    ball_probability,
    check_conditions,
    condition_h_check,
    derive_levy_constant,
    gamma_ab,
    green_function,
    h_function,
    local_integrability,
    prop3_sufficiency,
    shell_density,
)
from .coefficients import LocallyConstant, NormPower, RadialPower, StepFunction, constant
from .driver import (
    JumpPath,
    jump_intensities,
    omega_event,
    read_path,
    sample_increment,
    sample_path,
    truncate_large_jumps,
    write_path,
)
from .integral import AdaptedIntegrand, SimpleIntegrand, integrate_adapted, integrate_simple
from .occupation import local_time_grid, occupation_measure
from .padic import Ball, PAdicNumber, Window, character
from .sde import build_time_change, reconstruct_driver, solve_direct, solve_time_change

__all__ = [
    "AdaptedIntegrand", "Ball", "JumpPath", "LocallyConstant", "NormPower", "PAdicNumber",
    "RadialLevySpec", "RadialPower", "SimpleIntegrand", "StepFunction", "Window",
    "ball_probability", "build_time_change", "character", "check_conditions", "condition_h_check",
    "constant", "derive_levy_constant", "gamma_ab", "green_function", "h_function",
    "integrate_adapted", "integrate_simple", "jump_intensities", "local_integrability",
    "local_time_grid", "occupation_measure", "omega_event", "prop3_sufficiency", "read_path",
    "reconstruct_driver", "sample_increment", "sample_path", "shell_density", "solve_direct",
    "solve_time_change", "truncate_large_jumps", "write_path",
]
