"""Integrable free Motzkin spin chain: R-matrix, transfer matrices, Omega sectors and Bethe solver."""

from .bethe import BetheSolution, solve_all_sectors, solve_bae, xxx_reference_solve
from .chain_operators import ChainConfig, hamiltonian_direct, transfer_matrix, transfer_polynomial
from .local_algebra import build_r, build_tl_generator
from .omega import OmegaValue, eigenvalue_multiset, moebius_count, omega_matrix_permutation
from .verifier import match_spectra

__version__ = "0.1.0"
