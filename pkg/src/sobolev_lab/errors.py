"""Exception hierarchy shared by every module of the package."""


class SobolevLabError(ValueError):
    """Base class for all errors raised by sobolev_lab."""


class ContractError(SobolevLabError):
    """A documented precondition of an operation was violated."""


class DomainError(SobolevLabError):
    """A point or vector does not belong to the manifold or tangent space."""


class AntipodalError(SobolevLabError):
    """Minimizing geodesic is not unique (antipodal points on a sphere)."""


class DegenerateMetricError(SobolevLabError):
    """The degenerate bundle metric was evaluated where it is undefined."""


class ResolutionError(SobolevLabError):
    """A sampled map is too coarse for finite differences to be meaningful."""

    def __init__(self, message, node_index=None):
        super().__init__(message)
        self.node_index = node_index
