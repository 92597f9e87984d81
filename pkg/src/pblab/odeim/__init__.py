from .problem import BetheRoots, SpectralProblem, WaveValue
from .shooting import psi_at_match, chi_at_match, psi_series, riccati_series
from .determinant import (
    blz_A,
    chi_minus_at_match,
    eigenvalues,
    fd_oracle_eigs,
    quantum_wronskian_residual,
    spectral_D,
    symmetry_checks,
    truncated_product,
)
from .bethe import (
    bethe_residual,
    closed_form_first_root,
    excited_potential,
    excited_potential_z,
    solve_bethe,
)

__all__ = [
    "SpectralProblem",
    "WaveValue",
    "BetheRoots",
    "psi_at_match",
    "chi_at_match",
    "psi_series",
    "riccati_series",
    "spectral_D",
    "chi_minus_at_match",
    "quantum_wronskian_residual",
    "symmetry_checks",
    "eigenvalues",
    "fd_oracle_eigs",
    "truncated_product",
    "blz_A",
    "bethe_residual",
    "solve_bethe",
    "closed_form_first_root",
    "excited_potential",
    "excited_potential_z",
]
