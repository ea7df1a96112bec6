"""Inverse design of driving pulses for shaped single photons from an atom-cavity system."""

from .efficiency import EfficiencyReport, eta_cav, eta_max, eta_sup, report
from .forward import ForwardResult, integrate, loss_budget, verify
from .inverse import AmplitudeTrajectory, CavityParams, DrivePulse, compute_drive, compute_trajectory, solve
from .shapes import PhotonShape, ValidationReport, from_samples, make_catalog_shape, validate_shape

__all__ = [
    "AmplitudeTrajectory",
    "CavityParams",
    "DrivePulse",
    "EfficiencyReport",
    "ForwardResult",
    "PhotonShape",
    "ValidationReport",
    "compute_drive",
    "compute_trajectory",
    "eta_cav",
    "eta_max",
    "eta_sup",
    "from_samples",
    "integrate",
    "loss_budget",
    "make_catalog_shape",
    "report",
    "solve",
    "validate_shape",
    "verify",
]

__version__ = "0.1.0"
