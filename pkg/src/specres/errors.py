"""Exception hierarchy shared by all modules."""


class SpecresError(Exception):
    """Base class for every error raised by this package."""


class GenerationError(SpecresError):
    """Rejection sampling hit its attempt cap (separation likely infeasible)."""


class LinAlgConvergenceError(SpecresError):
    """A dense factorization failed to converge."""


class SymmetryError(SpecresError, ValueError):
    pass


class PencilError(SpecresError):
    """Base class for failures while extracting the correlation set."""


class SizeError(PencilError, ValueError):
    pass


class ModelOrderError(PencilError):
    pass


class ModulusError(PencilError):
    pass


class IllConditionedError(PencilError):
    pass


class MissingDCError(PencilError):
    pass


class PairingError(PencilError):
    """Differences could not be grouped into (+tau, -tau) pairs."""


class DisentangleError(SpecresError):
    """Base class for Step-2 failures; usually means a wrong |a_1| hypothesis."""


class ConsistencyError(DisentangleError):
    pass


class LeftoverError(ConsistencyError):
    pass


class CollisionError(DisentangleError):
    pass


class LabelingError(DisentangleError):
    pass


class RankError(DisentangleError):
    pass


class BoxError(DisentangleError):
    pass


class PhaseInconsistencyError(DisentangleError):
    pass


class SampleCountError(SpecresError, ValueError):
    pass


class NoSolutionError(SpecresError):
    """No hypothesis produced a valid solution; ``diagnostics`` says why."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class SparsityMismatchError(SpecresError, ValueError):
    pass
