"""Fractional variational integrators with Runge-Kutta convolution quadrature."""

from .tableau import ButcherTableau, gamma, lobatto_iiic, midpoint, stability
from .cq import (
    ScalarWeightSequence,
    StageTrajectory,
    WeightSequence,
    apply_advanced,
    apply_midcq,
    apply_retarded,
    compute_weights,
    midcq_weights,
)
from .galerkin import LagrangianProblem, LagrangeBasis, basis_for, discrete_lagrangian
from .models import (
    BENCHMARK_NAMES,
    BenchmarkSpec,
    bagley_torvik,
    by_name,
    coupled_oscillator,
    damped_oscillator_1d,
    energy,
    energy_series,
    with_derivative_order,
)
from .stepper import (
    FviConfig,
    FviSolution,
    NewtonError,
    action_variation,
    init_step,
    legendre_minus,
    legendre_plus,
    qp_closed_form,
    run,
    run_midcq,
    step,
)
from .harness import (
    ConvergenceReport,
    METHOD_NAMES,
    converge,
    export_weights,
    fit_slope,
    read_weights,
    run_benchmark,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "BENCHMARK_NAMES",
    "BenchmarkSpec",
    "ButcherTableau",
    "ConvergenceReport",
    "FviConfig",
    "FviSolution",
    "LagrangeBasis",
    "LagrangianProblem",
    "METHOD_NAMES",
    "NewtonError",
    "ScalarWeightSequence",
    "StageTrajectory",
    "WeightSequence",
    "action_variation",
    "apply_advanced",
    "apply_midcq",
    "apply_retarded",
    "bagley_torvik",
    "basis_for",
    "by_name",
    "compute_weights",
    "converge",
    "coupled_oscillator",
    "damped_oscillator_1d",
    "discrete_lagrangian",
    "energy",
    "energy_series",
    "export_weights",
    "fit_slope",
    "gamma",
    "init_step",
    "legendre_minus",
    "legendre_plus",
    "lobatto_iiic",
    "midcq_weights",
    "midpoint",
    "qp_closed_form",
    "read_weights",
    "run",
    "run_benchmark",
    "run_midcq",
    "simulate",
    "step",
    "stability",
    "with_derivative_order",
    "__version__",
]
