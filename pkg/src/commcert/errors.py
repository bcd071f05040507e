"""Exception hierarchy.

Each class carries the CLI exit code it maps to, so the command-line layer
can translate failures without a lookup table.
"""


class CommcertError(Exception):
    exit_code = 1


class SchemaError(CommcertError, ValueError):
    """Malformed input document (bad JSON, missing keys, NaN entries)."""

    exit_code = 2


class InvalidOperatorError(CommcertError, ValueError):
    """A matrix fails a structural requirement (Hermiticity, spectrum, trace)."""

    exit_code = 2


class DimensionError(CommcertError, ValueError):
    exit_code = 3


class PreconditionError(CommcertError, ValueError):
    """Inputs are well-formed but outside the operation's domain."""

    exit_code = 4


class ExtractionError(CommcertError):
    """Canonical-form extraction ran but its residuals exceed the guarantee."""

    exit_code = 1
