"""Relativistic-covariant Bohmian mechanics for non-interacting Klein-Gordon particles."""
from .errors import (DomainError, EnvelopeViolation, NodeProximity, StepLimitExceeded, ZeroMarginal,
                     ZeroNorm)
from .spacetime import FourVector, LorentzBoost, SpacetimeBox, apply_boost, contains, minkowski_dot
from .wavefn import (MultiTimeWaveFunction, PlaneWaveMode, ProductTerm, boost_wavefunction, evaluate,
                     gradient, kg_residual, norm_over_box, normalize, on_shell_energy, velocity)
from .dynamics import (IntegratorSettings, Trajectory, VelocityClass, classify_velocity, covariance_deviation,
                       integrate, superluminal_fraction)

__version__ = "0.1.0"
