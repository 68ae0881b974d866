from dataclasses import dataclass

import numpy as np


@dataclass
class TridiagonalSystem:
    """
    Central-difference rows of A_ss + (n-2) A_s + (r^2 V - delta0) A = -r^2 H on
    a uniform grid in s = log r. Row j couples nodes j-1, j, j+1 through
    ``lower[j]``, ``main[j]`` and ``upper[j]``.
    """

    grid: np.ndarray
    h: float
    lower: np.ndarray
    main: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray
    # nodes removed from the unknowns, with their prescribed values
    inner_dirichlet: bool = False
    outer_dirichlet: bool = False


class BaseClosure:
    """
    How the solver closes the system at an asymptotic end (r -> 0 or r -> oo).
    Ends that are genuine Dirichlet boundaries of the problem (r = lambda,
    a finite r_hi) are handled by the solver itself.
    """

    name = None

    def __init__(self, params):
        self.params = params

    def __repr__(self):
        return f"<{type(self).__name__}>"

    def extend_grid(self, problem, grid, h):
        """Return the grid the closure wants to solve on (default: unchanged)."""
        return grid

    def close_inner(self, system, exponent):
        raise NotImplementedError

    def close_outer(self, system, exponent):
        raise NotImplementedError
