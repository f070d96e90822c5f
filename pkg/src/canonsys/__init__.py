"""Canonical Hamiltonian systems with piecewise-constant Hamiltonians:
transfer matrices, Weyl functions, entropy and oscillation functionals,
factorizations H = G^T Q G and the associated Krein system."""

from .errors import CanonsysError, ConvergenceError, PreconditionError
from .hamiltonian import PiecewiseHamiltonian, validate, xi_eta, dual, conjugate_sl2
from .solver import transfer, weyl_fc, weyl_at_r, spectral_density, entropy_closed_form
from .functionals import (ktilde, ktilde_a2, entropy_closed, entropy_quadrature,
                          entropy_profile, theorem1_audit)
from .factorization import (factorize_oscillation, factorize_spectral, identity_factorization,
                            verify_factorization, normalize_l18, truncate_factorized)
from .krein import KreinCoefficients, propagate_krein, density_via_pstar
from .models import DiracPotential, dirac_to_hamiltonian, example1, example2, example3

__version__ = "0.1.0"
