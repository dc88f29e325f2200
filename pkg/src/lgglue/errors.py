"""Exception types shared across the package."""


class LGGlueError(Exception):
    """Base class for every package-specific error."""


class RingMismatch(LGGlueError):
    """Operands belong to series rings with different meta data."""


class NotInvertible(LGGlueError):
    """The lowest-weight part of a series is not a single monomial."""


class FloorViolation(LGGlueError):
    """An operation produced a q-exponent below the ring floor."""


class LatticeViolation(LGGlueError):
    """An exponent does not lie on the ring's 1/D lattice."""


class NotProportional(LGGlueError):
    """Two series do not agree up to a single monomial factor."""


class NotQuasiPeriodic(NotProportional):
    """A series is not an eigenvector of the substitution z -> qz."""


class NonTerminating(LGGlueError):
    """A factor stream failed to exceed the truncation weight in time."""


class DomainError(LGGlueError):
    """A numeric argument lies outside the domain of definition."""


class OutsideDomain(DomainError):
    """A point lies outside the annulus a local model is defined on."""


class InconsistentRelation(LGGlueError):
    """Disc data violates the boundary class relation."""


class ContourFailure(LGGlueError):
    """No admissible contour was found for a winding-number count."""


class ConvergenceFailure(LGGlueError):
    """A root search did not produce the expected number of points."""
