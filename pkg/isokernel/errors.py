# isokernel/errors.py
"""Exception hierarchy; exit_code is what the CLI returns for each failure class."""
from __future__ import annotations

from typing import Any


class IsoKernelError(Exception):
    exit_code = 1


class DomainError(IsoKernelError, ValueError):
    """Argument outside the mathematical domain (|s| > 1, nu <= 0, atom angle outside (0, pi])."""
    exit_code = 2


class ModelFileError(IsoKernelError):
    """Model JSON could not be parsed; the message names the offending field."""
    exit_code = 2

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class IntegrabilityError(IsoKernelError):
    exit_code = 3


class DivergenceError(IsoKernelError):
    """The kernel series does not converge; carries the density_class verdict."""
    exit_code = 4

    def __init__(self, message: str, verdict: Any = None):
        super().__init__(message)
        self.verdict = verdict


class StatisticalFailure(IsoKernelError):
    exit_code = 5


class TestbedFailure(IsoKernelError):
    exit_code = 6
    __test__ = False  # not a pytest class


class NumericalError(IsoKernelError):
    exit_code = 1


class NotInvertibleError(IsoKernelError):
    exit_code = 1


class UnsupportedError(IsoKernelError):
    exit_code = 1
