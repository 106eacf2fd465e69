"""Numerical lab for the damped p-system and the M1 radiative model on the half-line.

The modules follow the workflow: :mod:`closure` (coefficient laws),
:mod:`grid` (fields and quadrature), :mod:`profiles` (diffusion wave and
correction pair), :mod:`solver` (hyperbolic integrator), :mod:`perturbation`
(perturbation variables and forcings), :mod:`greens` (heat kernel),
:mod:`decay` (exponent fits) and :mod:`cli`.
"""
from .closure import ModelSpec, eddington_chi, gamma_law_model, m1_model, model_from_name
from .decay import DecayFit, PowerLawDecay, fit_exponent, theorem_table
from .errors import (AdmissibilityError, CFLError, ConvergenceError, DomainError, FitError,
                     M1LabError, PositivityError, StepFailure, TailWarning, VacuumError)
from .grid import HalfLineGrid, StateField

__all__ = [
    "ModelSpec", "eddington_chi", "gamma_law_model", "m1_model", "model_from_name",
    "DecayFit", "PowerLawDecay", "fit_exponent", "theorem_table",
    "AdmissibilityError", "CFLError", "ConvergenceError", "DomainError", "FitError",
    "M1LabError", "PositivityError", "StepFailure", "TailWarning", "VacuumError",
    "HalfLineGrid", "StateField",
]
__version__ = "0.1.0"
