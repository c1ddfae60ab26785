"""Exception types shared across the package.

The distinction matters at the CLI boundary: configuration/parameter problems
exit with code 1, numerical failures with code 2.
"""


class ParameterError(ValueError):
    """An argument is outside its documented range."""


class DomainError(ValueError):
    """Field values violate a mathematical precondition (names the offending nodes)."""


class ContractError(ValueError):
    """A caller broke an interface contract, e.g. missing boundary data."""


class SingularSystemError(RuntimeError):
    """The linear system has no unique solution (e.g. no Dirichlet nodes)."""


class NumericalError(RuntimeError):
    """A solver failed to converge; the message carries the residual report."""
