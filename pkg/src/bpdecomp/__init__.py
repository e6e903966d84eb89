"""Stochastic model of business-process decomposition.

The decomposition tree of a business process is modelled as a supercritical
Galton-Watson process with Poisson offspring.  The package evaluates the
model's closed-form predictions, checks them by simulation, fits the
intensity to observed decomposition sizes and turns a fit into an effort
estimate (expected number of model elements with a band).
"""
from .errors import (DegenerateSampleError, DomainError, InsufficientDataError,
                     ModelInapplicableError, ParseError, SimulationLimitError)
from .model import (ExtinctionProfile, HorizonDistribution, OffspringModel,
                    TotalsPrediction, conditioned_extinction_mass, delta_n,
                    exact_variance_total_fixed, expected_horizon, expected_total_fixed,
                    extinction_probability, horizon_distribution, iterated_pgf,
                    iterated_pgf_derivative, lambda_from_detail, max_horizon,
                    offspring_pgf, poisson_pmf, resource_limited_depth, resource_total,
                    totals_random_horizon, variance_total_fixed)

__version__ = "0.1.0"
