"""Exception taxonomy.

Two families matter to callers: InputError covers everything a user can fix
in their inputs (CLI maps it to exit code 2), ComputeError covers failures
of the run itself (exit code 3).
"""


class SlaforgeError(Exception):
    """Base class for every error raised by this package."""


class InputError(SlaforgeError):
    """Invalid user-supplied data, shapes, or configuration."""


class ComputeError(SlaforgeError):
    """A run failed after inputs validated (convergence, I/O, ...)."""


# instance / policy construction
class DimensionMismatch(InputError):
    pass


class NonPositiveSlack(InputError):
    pass


class NonPositiveRisk(InputError):
    pass


class NonPositiveTail(InputError):
    pass


class NegativeEntry(InputError):
    pass


class FractionOutOfRange(InputError):
    pass


# analytical solvers
class NonPositiveSLA(InputError):
    pass


class AllRatesZero(InputError):
    pass


class BoroughWithNoRisk(InputError):
    pass


class WrongDimensions(InputError):
    pass


class DidNotConverge(ComputeError):
    pass


# simulation
class TraceMisaligned(InputError):
    pass


class ZeroArrivalPair(InputError):
    pass


# search
class PointOutsideReference(InputError):
    pass


class NoFeasiblePolicy(ComputeError):
    pass


# ingestion / reporting
class MalformedRow(InputError):
    pass


class EmptyFile(InputError):
    pass


class UnparseableDate(InputError):
    pass


class NegativeCapacity(InputError):
    pass


class IoError(ComputeError):
    pass
