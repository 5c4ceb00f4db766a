"""Centralized numeric tolerances and solver defaults.

Every module pulls its tolerance constants from here so that the package has
exactly one knob per check instead of magic numbers scattered through the
code.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Package-wide numeric tolerances (all double precision)."""

    # geometry / graph
    unit_norm: float = 1e-12          # sightline unit-norm check
    duplicate_points: float = 1e-12   # kNN degeneracy guard
    # conic solver
    solver_tol: float = 1e-6          # primal/dual/gap residual target
    solver_max_iter: int = 200        # interior-point iteration cap
    # extraction / reporting
    psd_eig: float = 1e-8             # "numerically PSD" slack on eigenvalues
    scale_row: float = 1e-6           # sum-of-geodesics anchor check


DEFAULT_TOL = Tolerances()

# Default objective weights for the quasi-isometric / hybrid programs.  The
# relaxations are governed by the ratio of these weights rather than absolute
# values; both are exposed on every build call and swept by the test-suite.
DEFAULT_LAMBDA_I = 100.0
DEFAULT_LAMBDA_E = 10.0
