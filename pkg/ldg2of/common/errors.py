# -*- coding: utf-8 -*-

##
## Exceptions raised by the library. Each one carries the process exit code the
## driver uses when the error escapes a command.
##

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NO_CONVERGENCE = 4
EXIT_ANALYSIS = 5


class LdgError(Exception):
    """Base class for all errors raised by ldg2of."""
    exit_code = EXIT_USAGE


# Validation errors

class InvalidParams(LdgError, ValueError):
    pass


class IndexOutOfRange(LdgError, IndexError):
    pass


class NotUnit(LdgError, ValueError):
    pass


class UnsupportedDomain(LdgError, ValueError):
    pass


class InactiveNode(LdgError, ValueError):
    pass


class PointOnBoundary(LdgError, ValueError):
    pass


class InvalidEscapeConfig(LdgError, ValueError):
    pass


class UnderSampled(LdgError, ValueError):
    pass


class SingularB0(LdgError, ValueError):
    """B0 is singular (mu = 0); the b^2 = 0 functionals must be used."""


class WrongRegime(LdgError, ValueError):
    """A b^2 = 0 functional was called with b^2 != 0."""


class NotConformal(LdgError, ValueError):
    pass


# Numerical failures

class DegenerateSpectrum(LdgError, RuntimeError):
    """The principal eigenvalue is not separated from the others."""
    exit_code = EXIT_NO_CONVERGENCE

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class OrthogonalReference(LdgError, RuntimeError):
    exit_code = EXIT_NO_CONVERGENCE


class AntipodalSingularity(LdgError, RuntimeError):
    """rotation_to() was asked for n = -e3, where R_n is undefined."""
    exit_code = EXIT_NO_CONVERGENCE

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class SolveFailed(LdgError, RuntimeError):
    exit_code = EXIT_NO_CONVERGENCE


class NoConvergence(LdgError, RuntimeError):
    """The iteration budget ran out. The partial result and report are attached."""
    exit_code = EXIT_NO_CONVERGENCE

    def __init__(self, message: str, result=None, report=None):
        super().__init__(message)
        self.result = result
        self.report = report


class NormCollapse(LdgError, RuntimeError):
    exit_code = EXIT_NO_CONVERGENCE


class StepUnderflow(LdgError, RuntimeError):
    exit_code = EXIT_NO_CONVERGENCE

    def __init__(self, message: str, result=None, report=None):
        super().__init__(message)
        self.result = result
        self.report = report


class BadFit(LdgError, RuntimeError):
    exit_code = EXIT_ANALYSIS


# I/O

class FieldFormatError(LdgError, IOError):
    exit_code = EXIT_IO
