import logging

import numpy as np

from yamabelab.closures.base import BaseClosure


logger = logging.getLogger("yamabelab.closures")


class DirichletClosure(BaseClosure):
    """
    Truncation cross-check: extend each asymptotic end by ``EXTEND_DECADES``
    decades in whole log steps and pin a = 0 at the new end nodes.
    Interior nodes of the original grid keep their positions.
    """

    name = "dirichlet"

    def __init__(self, params):
        super().__init__(params)
        self.extend_decades = float(params.get("EXTEND_DECADES", 3))

    def extend_grid(self, problem, grid, h):
        steps = int(round(self.extend_decades * np.log(10) / h))
        s = np.log(grid)
        parts = []
        if problem.inner_is_asymptotic:
            parts.append(s[0] - h * np.arange(steps, 0, -1))
        parts.append(s)
        if problem.outer_is_asymptotic:
            parts.append(s[-1] + h * np.arange(1, steps + 1))
        extended = np.exp(np.concatenate(parts))
        logger.debug(
            "Extended grid from %d to %d nodes for the Dirichlet cross-check",
            len(grid),
            len(extended),
        )
        return extended

    def close_inner(self, system, exponent):
        system.inner_dirichlet = True

    def close_outer(self, system, exponent):
        system.outer_dirichlet = True


Closure = DirichletClosure
