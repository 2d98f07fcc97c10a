"""Discrete eigenvalue and mean-curvature inequalities for submanifolds of hyperbolic space."""
from .config import Config, Tolerances
from .harness import VerificationReport, gamma_mu_family, verify, verify_clifford
from .immersion import Immersion, ValidationError, load, save
from .kernel import AmbientSpace, DomainError

__all__ = [
    "AmbientSpace", "Config", "DomainError", "Immersion", "Tolerances", "ValidationError",
    "VerificationReport", "gamma_mu_family", "load", "save", "verify", "verify_clifford",
]
__version__ = "0.1.0"
