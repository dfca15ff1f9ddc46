"""Design and verification toolkit for a SQUID-mediated two-photon coupler."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .circuit import CircuitParameters, derive_energies, reference_parameters, solve_equilibrium
from .rates import compute_rate_set

__all__ = ["CircuitParameters", "compute_rate_set", "derive_energies",
           "reference_parameters", "solve_equilibrium", "__version__"]
