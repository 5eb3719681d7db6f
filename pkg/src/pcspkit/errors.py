"""Shared exception types.

The split matters for the CLI exit codes and for tests: bad caller data is an
InputError, objects that do not fit together raise StructuralError, violated
arithmetic preconditions raise ParameterError, and InvariantError is reserved
for conditions that are mathematically impossible on valid inputs (hitting one
means a bug, never a bad input).
"""


class PcspkitError(Exception):
    """Base class for all library errors."""


class InputError(PcspkitError):
    """Malformed or inconsistent caller-supplied data."""


class StructuralError(PcspkitError):
    """Objects that do not fit together (dissimilar structures, arity clashes)."""


class ParameterError(PcspkitError):
    """An arithmetic precondition on the supplied parameters does not hold."""


class ResourceError(PcspkitError):
    """An exhaustive search would exceed its configured budget."""


class PromiseViolationError(PcspkitError):
    """An input promised to be strictly solvable turned out not to be."""


class InvariantError(PcspkitError):
    """Internal invariant breach; indicates an implementation bug."""
