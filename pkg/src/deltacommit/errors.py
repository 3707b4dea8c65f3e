"""Common exception base for the package.

Every module defines its own error types; they all derive from
DeltaCommitError so callers (and the CLI) can catch tool errors without
swallowing genuine bugs.
"""


class DeltaCommitError(Exception):
    """Base class for all errors raised by this package."""
