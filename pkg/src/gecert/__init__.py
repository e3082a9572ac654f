"""Trajectories and regularity certificates for scalar parametric generalized equations.

The equation is 0 in f(z) - p(t) + F(z) with f single-valued and F a
closed-graph set-valued map, both built from series nonsmooth circuits.
"""
from .circuit import (
    Diac,
    GeneralizedEquation,
    PracticalDiode,
    Resistor,
    SampleTable,
    Signal,
    Sinusoid,
    Zener,
    compose_series,
    diac_characteristic,
    signal_distance,
)
from .perturb import (
    construct_perturbed_trajectory,
    method2_trajectory,
    perturbed_certificate,
    perturbed_equation,
    verify_deviation_bound,
)
from .regularity import certify_trajectory, smr_pointwise, uniform_certificate, verify_localization
from .solver import Grid, link_trajectories, solve_static, sweep

__version__ = "0.1.0"

__all__ = [
    "Diac", "GeneralizedEquation", "Grid", "PracticalDiode", "Resistor", "SampleTable", "Signal",
    "Sinusoid", "Zener", "certify_trajectory", "compose_series", "construct_perturbed_trajectory",
    "diac_characteristic", "link_trajectories", "method2_trajectory", "perturbed_certificate",
    "perturbed_equation", "signal_distance", "smr_pointwise", "solve_static", "sweep",
    "uniform_certificate", "verify_deviation_bound", "verify_localization", "__version__",
]
