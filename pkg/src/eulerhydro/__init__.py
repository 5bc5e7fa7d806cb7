"""Attractive lattice gases under Euler scaling, and the scalar conservation laws they converge to."""

from .conservation_law import (
    FluxSpec,
    envelope,
    godunov_reference,
    h_c,
    legendre_transform,
    make_flux,
    oleinik_check,
    riemann_solution,
    tabulated_flux,
)
from .dynamics import CoupledRun, SimulationRun, bond_current, simulate, simulate_coupled
from .equilibrium import FluxTable, build_flux_table, estimate_flux, kexclusion_bounds, structural_checks
from .errors import (
    ConfigurationError,
    DomainError,
    EulerHydroError,
    InfeasibilityError,
    NoninteractionError,
    RejectedJumpError,
)
from .experiments import (
    ExperimentReport,
    RiemannData,
    hydro_experiment,
    propagation_experiment,
    riemann_local_equilibrium,
    sample_configuration,
    stability_experiment,
)
from .glimm import GlimmConfig, glimm_run, r_valued_approximation, two_level_approximation
from .lattice_core import LatticeConfig, RateModel, get_model, validate_model
from .metrics import delta_config_profile, delta_configs, delta_profiles, l1_distance, total_variation
from .profiles import PiecewiseConstantProfile

__version__ = "0.1.0"

__all__ = [
    "FluxSpec",
    "envelope",
    "godunov_reference",
    "h_c",
    "legendre_transform",
    "make_flux",
    "oleinik_check",
    "riemann_solution",
    "tabulated_flux",
    "CoupledRun",
    "SimulationRun",
    "bond_current",
    "simulate",
    "simulate_coupled",
    "FluxTable",
    "build_flux_table",
    "estimate_flux",
    "kexclusion_bounds",
    "structural_checks",
    "ConfigurationError",
    "DomainError",
    "EulerHydroError",
    "InfeasibilityError",
    "NoninteractionError",
    "RejectedJumpError",
    "ExperimentReport",
    "RiemannData",
    "hydro_experiment",
    "propagation_experiment",
    "riemann_local_equilibrium",
    "sample_configuration",
    "stability_experiment",
    "GlimmConfig",
    "glimm_run",
    "r_valued_approximation",
    "two_level_approximation",
    "LatticeConfig",
    "RateModel",
    "get_model",
    "validate_model",
    "delta_config_profile",
    "delta_configs",
    "delta_profiles",
    "l1_distance",
    "total_variation",
    "PiecewiseConstantProfile",
]
