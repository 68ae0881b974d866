class YamabeLabError(Exception):
    def __init__(self, *args, **kwargs):
        self.context = kwargs
        super().__init__(*args)


class PreconditionError(YamabeLabError):
    """A problem or input violates a stated hypothesis or inequality."""

    def __init__(self, *args, inequality=None, **kwargs):
        self.inequality = inequality
        super().__init__(*args, **kwargs)


class OutOfDomainError(YamabeLabError):
    def __init__(self, *args, radius=None, **kwargs):
        self.radius = radius
        super().__init__(*args, **kwargs)


class SolverError(YamabeLabError):
    pass


class QuadratureError(YamabeLabError):
    def __init__(self, *args, achieved=None, **kwargs):
        self.achieved = achieved
        super().__init__(*args, **kwargs)


class ConsistencyError(YamabeLabError):
    """Two independent evaluations of the same quantity disagree."""

    def __init__(self, *args, lhs=None, rhs=None, **kwargs):
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(*args, **kwargs)


class UnsupportedDegreeError(YamabeLabError):
    def __init__(self, *args, degree=None, **kwargs):
        self.degree = degree
        super().__init__(*args, **kwargs)


class UnsupportedOrderError(YamabeLabError):
    pass


class HypothesisError(PreconditionError):
    pass


class RefinementError(YamabeLabError):
    def __init__(self, *args, order=None, **kwargs):
        self.order = order
        super().__init__(*args, **kwargs)


class DependencyError(YamabeLabError):
    def __init__(self, *args, missing=None, **kwargs):
        self.missing = missing
        super().__init__(*args, **kwargs)


class ConfigError(YamabeLabError):
    def __init__(self, *args, line=None, key=None, **kwargs):
        self.line = line
        self.key = key
        super().__init__(*args, **kwargs)

    def __str__(self):
        message = super().__str__()
        if self.line is not None:
            message = f"line {self.line}: {message}"
        return message
