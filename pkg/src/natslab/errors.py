"""Exception types raised by natslab."""


class NatslabError(Exception):
    """Base class for all library errors."""


class InvalidArgument(NatslabError, ValueError):
    pass


class DimensionOverflow(NatslabError, ValueError):
    """Raised when a many-copy Hilbert space exceeds the dense dimension cap."""


class IndexOutOfRange(NatslabError, IndexError):
    pass


class DimensionMismatch(NatslabError, ValueError):
    pass


class NotHermitian(NatslabError, ValueError):
    pass


class InvalidState(NatslabError, ValueError):
    """Matrix is not a valid density operator (trace or positivity)."""


class InfeasibleTarget(NatslabError, ValueError):
    """Target charge values lie on or outside the boundary of achievable moments."""


class NoConvergence(NatslabError, RuntimeError):
    pass


class EmptySubspace(NatslabError, ValueError):
    pass


class NotUnitary(NatslabError, ValueError):
    pass


class RepresentationMismatch(NatslabError, ValueError):
    pass


class AlphaOutOfRange(NatslabError, ValueError):
    pass


class ConvergenceWarning(RuntimeWarning):
    """An iterative routine stopped at its iteration cap; the best iterate was returned."""
