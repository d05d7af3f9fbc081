"""Exception hierarchy shared across the package.

The CLI maps these onto its documented exit codes: format problems
(bad container bytes) are distinct from validation problems (bad
values or parameters), which are distinct from internal failures.
"""

from __future__ import annotations


class StSimDiffError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(StSimDiffError):
    """The byte stream is not a well-formed container (magic, version, dtype)."""


class CorruptionError(FormatError):
    """The container header is fine but the payload length is wrong."""


class ValidationError(StSimDiffError):
    """Values or parameters violate a documented invariant."""


class ShapeError(ValidationError):
    """An external array has the wrong length or shape."""


class EmptyDomainError(ValidationError):
    """An operation needs a nonempty domain (e.g. percentile over zero edges)."""


class GuardError(StSimDiffError):
    """A reference-implementation size guard was exceeded."""


class ResourceError(StSimDiffError):
    """The host ran out of a resource (memory) for a named workload size."""
