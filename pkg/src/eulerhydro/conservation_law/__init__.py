"""Scalar conservation laws with a Lipschitz flux: envelopes, Riemann fans, entropy checks and a finite-volume reference."""

from .envelope import DEFAULT_RESOLUTION, EnvelopeData, envelope, h_c, legendre_transform
from .entropy import BumpTestFunction, kruzkov_pair, oleinik_check, weak_form_residual
from .flux import FLUX_REGISTRY, FluxSpec, make_flux, tabulated_flux
from .godunov import ContractionReport, GridSolution, godunov_flux, godunov_reference, l1_contraction_check
from .riemann import RiemannSolution, riemann_solution

__all__ = [
    "DEFAULT_RESOLUTION",
    "EnvelopeData",
    "envelope",
    "h_c",
    "legendre_transform",
    "BumpTestFunction",
    "kruzkov_pair",
    "oleinik_check",
    "weak_form_residual",
    "FLUX_REGISTRY",
    "FluxSpec",
    "make_flux",
    "tabulated_flux",
    "ContractionReport",
    "GridSolution",
    "godunov_flux",
    "godunov_reference",
    "l1_contraction_check",
    "RiemannSolution",
    "riemann_solution",
]
