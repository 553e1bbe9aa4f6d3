"""Exception hierarchy shared across the package.

Two failure families matter to callers (and to the CLI exit codes):
semantic problems with otherwise readable inputs (``ValidationFailure``,
exit code 2) and unreadable or corrupt artifacts (``LoadFailure``, exit
code 3).
"""


class DlrecError(Exception):
    """Base class for all package errors."""


class ValidationFailure(DlrecError):
    """Input is readable but semantically invalid."""


class LoadFailure(DlrecError):
    """A file or artifact is missing, unreadable, or corrupt."""
