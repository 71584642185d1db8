class RNLSError(Exception):
    """Base class for every error raised by rnls."""


class MeshDegenerate(RNLSError):
    """The mesh Jacobian is non-positive or non-finite at some node."""


class NonFiniteField(RNLSError):
    """A field holds NaN or infinite samples."""


class ShootingBracketFailure(RNLSError):
    """No over/undershoot sign change over the initial-height bracket."""


class NonConvergence(RNLSError):
    """An iterative solve hit its iteration cap before converging."""


class ExponentMismatch(RNLSError):
    """A mass-critical quantity was requested for a non-critical exponent."""


class MappedTimeOutOfDomain(RNLSError):
    """The transformed time lies beyond the lifespan of the source solution."""


class TimeOutOfRange(RNLSError):
    """The requested time lies outside the domain of the inverse transform."""


class SingularTime(RNLSError):
    """The propagator kernel is singular at the requested time."""


class QuadratureUnderresolved(RNLSError):
    """The kernel phase varies too fast for the quadrature grid."""


class ZeroField(RNLSError):
    """A normalisation by the sup norm was requested on a zero field."""


class MeshTangled(RNLSError):
    """Redistribution produced a non-positive Jacobian."""


class WindowTooShort(RNLSError):
    """Too few diagnostics rows to difference."""


class RunDidNotBlowUp(RNLSError):
    """Blowup post-processing was requested on a run that ended otherwise."""


class InsufficientDecades(RNLSError):
    """The data do not span enough decades of T - t for a rate fit."""


class DomainError(RNLSError):
    """The double logarithm log|log(T - t)| is not positive."""


class SchemaError(RNLSError):
    """Configuration failed validation.

    ``errors`` holds every ``(path, message)`` pair found, not only the first.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = ['{}: {}'.format(path, message) for path, message in self.errors]
        super().__init__('invalid configuration\n  ' + '\n  '.join(lines))
