"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`LqJacobiError`
so that callers (notably the CLI) can separate input problems from bugs.
"""


class LqJacobiError(Exception):
    """Base class for all package errors."""


class DimensionError(LqJacobiError, ValueError):
    """Matrix or vector shapes are incompatible."""


class IngestionError(LqJacobiError, ValueError):
    """A problem description could not be parsed or validated."""


class ParameterError(LqJacobiError, ValueError):
    """An algorithm parameter is out of its admissible range."""


class NumericalFailure(LqJacobiError, ArithmeticError):
    """A dense kernel (eigenvalues, SVD, ...) did not converge."""


class ClassificationError(LqJacobiError):
    """Spectral or Jordan classification is inconsistent at the given tolerance.

    ``staircase`` carries the rank sequence when the failure comes from a
    Jordan rank staircase.
    """

    def __init__(self, message, staircase=None):
        super().__init__(message)
        self.staircase = staircase


class ConstructionError(LqJacobiError):
    """A constructed subspace failed its isotropy or invariance check."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class ConsistencyError(LqJacobiError):
    """Data contradicts a structural guarantee (e.g. a non-positive frequency sum)."""


class ContractError(LqJacobiError):
    """A documented precondition of an operation does not hold."""


class ChartError(LqJacobiError):
    """A Lagrangian subspace is not transversal to the requested chart."""


class ReductionError(LqJacobiError):
    """Symplectic reduction is undefined at some sample (curve meets the isotropic subspace)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
