"""Exception taxonomy shared by the library and the command line.

Every class carries the process exit code the CLI reports for it.
"""


class RelobsError(Exception):
    exit_code = 1


class UsageError(RelobsError):
    """Bad arguments, unparsable input or a request outside an operation's domain."""

    exit_code = 2


class ModelError(RelobsError):
    """A system, model or frame-map document violates its invariants."""

    exit_code = 3


class NumericalError(RelobsError):
    """A solver did not reach its stated tolerance."""

    exit_code = 4


class UnstableModel(ModelError):
    """Force constants are not positive semidefinite."""


class FitDegeneracy(UsageError):
    """Too few or degenerate sample points for a scaling fit."""


class ProbeError(UsageError):
    """The probe operator does not exist in the requested coordinate space."""
