"""Quantum-algorithm toolkit for the Schlögl chemical master equation.

Builds the birth-death generator, its Hermitian surrogates and their Pauli
expansions, and runs VQD, phase estimation and variational SVD on a dense
statevector simulator, with exact dense solutions for comparison.
"""

from .cme import SchloglSystem, build_generator, preset
from .errors import (
    AmbiguityError,
    DomainError,
    EstimationError,
    NullSpaceNotFound,
    SchloglError,
    SolverError,
)
from .hermitize import block_embed, constant_state, spd_form, unitary_of
from .oracle import diagonalize, zeromode
from .pauli import Ordering, PauliSum, decompose, sort_terms, truncate
from .qpe import QPEConfig, qpe_run
from .qsim import AnsatzSpec, Circuit, Rotation, StateVector, build_ansatz
from .variational import VQDConfig, vqd, vqd_exact0, vqe_ground
from .vqsvd import VQSVDConfig, steady_state_pipeline, vqsvd_decompose

__version__ = "0.1.0"

__all__ = [
    "AmbiguityError",
    "AnsatzSpec",
    "Circuit",
    "DomainError",
    "EstimationError",
    "NullSpaceNotFound",
    "Ordering",
    "PauliSum",
    "QPEConfig",
    "Rotation",
    "SchloglError",
    "SchloglSystem",
    "SolverError",
    "StateVector",
    "VQDConfig",
    "VQSVDConfig",
    "block_embed",
    "build_ansatz",
    "build_generator",
    "constant_state",
    "decompose",
    "diagonalize",
    "preset",
    "qpe_run",
    "sort_terms",
    "spd_form",
    "steady_state_pipeline",
    "truncate",
    "unitary_of",
    "vqd",
    "vqd_exact0",
    "vqe_ground",
    "vqsvd_decompose",
    "zeromode",
]
