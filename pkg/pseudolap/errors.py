"""Exceptions raised by pseudolap.

Every failure named in the module contracts has its own class so callers
can catch precisely what they expect. Notices (empty vertex sets, undefined
fits, zero Harnack denominators) are not exceptions; they are logged and
recorded on the returned reports.
"""
from typing import Optional, Sequence


class PseudolapError(Exception):
    """Base class for all pseudolap errors."""


class InvalidInputError(PseudolapError, ValueError):
    """An argument violates a documented precondition."""


class EigenSolverError(PseudolapError):
    """The Jacobi iteration failed to converge."""


class SingularityError(InvalidInputError):
    """A profile was evaluated at its singular point."""


class DegenerateDirectionError(SingularityError):
    """A closed-form Hessian was requested on a coordinate hyperplane.

    Attributes
    ----------
    indices : tuple of int
        Axes i with |x_i| inside the hyperplane exclusion margin.
    """
    def __init__(self, indices: Sequence[int], message: Optional[str] = None):
        self.indices = tuple(int(i) for i in indices)
        if message is None:
            message = (
                "Hessian is undefined on the coordinate hyperplanes"
                f" z_i = 0 for i in {list(self.indices)}"
            )
        super().__init__(message)


class SearchFailureError(PseudolapError):
    """The barrier exponent ladder was exhausted."""


class BoundaryProximityError(InvalidInputError):
    """A stencil was requested too close to the grid boundary."""


class InvalidSliceError(InvalidInputError):
    """A slice specification does not match the grid."""


class FieldFormatError(PseudolapError):
    """A field file could not be decoded."""


class MalformedHeaderError(FieldFormatError):
    pass


class DimensionOverflowError(FieldFormatError):
    pass


class TruncatedPayloadError(FieldFormatError):
    pass


class DivergenceError(PseudolapError):
    """The relaxation residual grew far above its initial value.

    Attributes
    ----------
    report : pseudolap.solver.SolveReport
        The report at the time divergence was detected.
    """
    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class EllipticityNormalizationError(InvalidInputError):
    """Residual sandwich checks need lambda <= 1 <= Lambda."""


class OutOfDomainError(InvalidInputError):
    """A rescaled cube does not fit inside the source grid."""


class DyadicTreeError(InvalidInputError):
    """Invalid navigation of the dyadic cube tree."""


class ConfigError(PseudolapError):
    """Experiment configuration error.

    Attributes
    ----------
    key : str or None
        Offending key, if any.
    line : int or None
        1-based line number in the config text, if known.
    """
    def __init__(
            self,
            message: str,
            key: Optional[str] = None,
            line: Optional[int] = None,
    ):
        self.key = key
        self.line = line
        location = ""
        if key is not None:
            location += f" [key '{key}']"
        if line is not None:
            location += f" [line {line}]"
        super().__init__(message + location)


class MissingKeyError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


class TypeMismatchError(ConfigError):
    pass


class ConstraintViolationError(ConfigError):
    pass
