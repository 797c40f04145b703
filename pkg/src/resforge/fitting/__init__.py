"""Fitters for resonance traces, power scans, Kerr maps and field sweeps."""
from .circle import InitialGuess, initial_guess_circle
from .field import (diffusion_from_series, fit_ctilde_from_frequency, fit_field_sweep_bc,
                    fit_misalignment)
from .kerr import KERR_PARAMS, bifurcation_flags, fit_kerr_2d
from .power import POWER_PARAMS, fit_power_scan
from .qc import QCVerdict, qc_filter
from .resonance import (LINEAR_PARAMS, environment_from_fit, fit_linear_resonance,
                        resonance_from_fit)

__all__ = [
    "InitialGuess", "initial_guess_circle", "diffusion_from_series", "fit_ctilde_from_frequency",
    "fit_field_sweep_bc", "fit_misalignment", "KERR_PARAMS", "bifurcation_flags", "fit_kerr_2d",
    "POWER_PARAMS", "fit_power_scan", "QCVerdict", "qc_filter", "LINEAR_PARAMS",
    "environment_from_fit", "fit_linear_resonance", "resonance_from_fit",
]
