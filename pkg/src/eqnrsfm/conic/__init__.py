"""Small-scale symmetric-cone programming: IR, reformulations, and a solver.

``program`` hosts the problem intermediate representation (PSD/SOC blocks,
nonnegative and free scalars, equality rows over :class:`LinearFunctional`
terms), the epigraph/slack reformulation helpers, and a versioned text
export for external-solver interop.  ``solver`` embeds a homogeneous
self-dual interior-point method with Nesterov-Todd scaling sized for
desk-scale instances (PSD blocks up to ~200x200, a few thousand rows).
"""

from .program import (
    ConicProgram,
    add_abs_epigraph,
    add_inverse_epigraph,
    add_square_dominance,
    export_program,
    import_program,
    scalar_functional,
)
from .solver import ConicSolution, solve

__all__ = [
    "ConicProgram",
    "ConicSolution",
    "add_abs_epigraph",
    "add_inverse_epigraph",
    "add_square_dominance",
    "export_program",
    "import_program",
    "scalar_functional",
    "solve",
]
