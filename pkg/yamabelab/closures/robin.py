from yamabelab.closures.base import BaseClosure


class RobinClosure(BaseClosure):
    """
    Impose a' = (k / r) a at an asymptotic end, i.e. A_s = k A in the log
    variable, through a ghost node: A_(-1) = A_1 - 2 h k A_0 at the inner end
    and A_N = A_(N-2) + 2 h k A_(N-1) at the outer end.
    """

    name = "robin"

    def close_inner(self, system, exponent):
        lower = system.lower[0]
        system.main[0] += -2 * system.h * exponent * lower
        system.upper[0] += lower
        system.lower[0] = 0.0

    def close_outer(self, system, exponent):
        upper = system.upper[-1]
        system.main[-1] += 2 * system.h * exponent * upper
        system.lower[-1] += upper
        system.upper[-1] = 0.0


Closure = RobinClosure
