"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DclabError(Exception):
    exit_code = 1


class NumericFailure(DclabError):
    """Integration, root finding or quadrature did not reach tolerance."""

    exit_code = 1


class InvalidInput(DclabError, ValueError):
    exit_code = 2


class InvariantViolation(DclabError):
    """A structural identity that must hold did not."""

    exit_code = 3
