"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`DDPoleError`
and carries the CLI exit code it maps to.
"""


class DDPoleError(Exception):
    exit_code = 1


class InvalidInputError(DDPoleError, ValueError):
    """Malformed, non-finite or dimensionally inconsistent input."""


class NumericFailure(DDPoleError, ArithmeticError):
    """A dense solver failed or a post-hoc residual check did not hold."""

    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class UnsupportedError(DDPoleError):
    """The request is well formed but outside what the method covers."""

    exit_code = 2


class DataRankError(DDPoleError):
    """rank [X0; U0] < n + m: the data is not rich enough."""

    exit_code = 3


class UnidentifiableError(DataRankError):
    pass


class NullspaceEmptyError(DataRankError):
    """X1 - lambda*X0 has a trivial nullspace for some requested pole."""


class RankSelectionError(NumericFailure):
    """No nullspace selection produced rank(X0 M) = n within the redraw budget."""


class MultiplicityError(UnsupportedError):
    """A pole multiplicity exceeds the number of inputs."""


class InfeasibleError(DDPoleError):
    exit_code = 2


class PreconditionError(InfeasibleError):
    pass


class GenerationError(DDPoleError):
    exit_code = 4
