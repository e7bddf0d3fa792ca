"""Exception taxonomy shared across the package.

Two failure families matter to callers: bad input (rejected before any heavy
work) and numerical breakdown (detected during computation).  The CLI maps
them to exit codes 2 and 3 respectively.
"""


class InputError(ValueError):
    """Invalid user-supplied data: meshes, grids, materials, events, flags."""


class MeshError(InputError):
    """Mesh fails a structural requirement (non-triangular, not watertight)."""


class ResolutionError(InputError):
    """Discretization too coarse for the requested frequency or grid bound."""


class NumericalError(RuntimeError):
    """Solver breakdown: singular systems, non-convergence, instability."""
