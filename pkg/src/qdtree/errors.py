"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class QDTreeError(Exception):
    exit_code = 2


class ConfigError(QDTreeError, ValueError):
    """Invalid parameters or forbidden engine/variant combination."""

    exit_code = 1


class NumericalError(QDTreeError, ArithmeticError):
    """A numerical invariant was violated or a quantity is undefined."""

    exit_code = 2


class ForbiddenBranchError(NumericalError):
    """Branch map evaluated on a weight-zero pair."""


class DegenerateEnsembleError(NumericalError):
    pass


class NoSignChangeError(NumericalError):
    pass


class ResourceCapError(QDTreeError, MemoryError):
    """Peak count, table size or tree depth above the configured cap."""

    exit_code = 3
