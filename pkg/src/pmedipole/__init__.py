"""Numerical laboratory for the large-time behaviour of the porous medium
equation on the half-line: dipole and Barenblatt solutions, barrier
functions, an explicit moment-conserving solver and near-field error metrics.
"""

from pmedipole.exact_solutions import (
    BarenblattSolution,
    DipoleProfile,
    barenblatt_eval,
    build_profile,
    dipole_eval,
    profile_eval,
    profile_moment,
    profile_ode_residual,
    similarity_exponents,
)

__version__ = "0.1.0"

__all__ = [
    "BarenblattSolution",
    "DipoleProfile",
    "barenblatt_eval",
    "build_profile",
    "dipole_eval",
    "profile_eval",
    "profile_moment",
    "profile_ode_residual",
    "similarity_exponents",
]
