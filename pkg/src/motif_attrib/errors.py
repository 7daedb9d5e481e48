"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so library code should raise the most
specific class that applies.
"""


class InputError(ValueError):
    """Invalid user-supplied data: graphs, subsets, parameters, files."""


class BackendError(RuntimeError):
    """Failure while evaluating a value backend."""


class BackendConnectionError(BackendError):
    """Transport-level failure (connect, read, timeout). Retriable."""


class BackendProtocolError(BackendError):
    """The remote side violated the wire protocol. Not retriable."""


class BackendEvalError(BackendError):
    """The remote side reported an evaluation error for a request."""
