"""Two-point-measurement work statistics and information-equality checks."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    NumericalValidationError,
    ScenarioError,
    TpmError,
    UndefinedObservableAtSample,
)
from .infotherm import AverageReport, InfoMatrix, exp_average, i_tilde_matrix, jarzynski_average, residuals  # noqa: E402
from .qstate import GibbsEnsemble, Hamiltonian, density_matrix, free_energy_difference, gibbs, make_hamiltonian  # noqa: E402
from .tpm import PAPER, STANDARD, Conventions, Evolution, TpmDistribution, build_tpm, conditional_matrix, thermal_chain_check  # noqa: E402

__all__ = [
    "AverageReport",
    "Conventions",
    "Evolution",
    "GibbsEnsemble",
    "Hamiltonian",
    "InfoMatrix",
    "NumericalValidationError",
    "PAPER",
    "STANDARD",
    "ScenarioError",
    "TpmDistribution",
    "TpmError",
    "UndefinedObservableAtSample",
    "build_tpm",
    "conditional_matrix",
    "density_matrix",
    "exp_average",
    "free_energy_difference",
    "gibbs",
    "i_tilde_matrix",
    "jarzynski_average",
    "make_hamiltonian",
    "residuals",
    "thermal_chain_check",
]
