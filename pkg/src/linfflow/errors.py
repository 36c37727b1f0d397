"""Exception taxonomy shared across the package.

The CLI maps these onto its exit-status contract: InputError -> 2,
SolverFault -> 3, InfeasibleError -> 4.
"""


class InputError(ValueError):
    """Malformed or out-of-contract input (bad indices, negative radius, parse errors)."""


class SolverFault(RuntimeError):
    """An internal invariant of a solver or data structure was breached."""


class InfeasibleError(RuntimeError):
    """Demands certified unroutable at every searched congestion level."""
