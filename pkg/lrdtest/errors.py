import logging

from decorator import decorator

logger = logging.getLogger("lrdtest")


class LRDError(Exception):
    """Base class of every error raised by lrdtest.

    ``block`` is the (1-based) block index the error originated in, when
    there is one.
    """

    def __init__(self, message="", block=None):
        self.message = message
        self.block = block
        super().__init__(message)

    def __str__(self):
        if self.block is not None:
            return f"{self.message} [block {self.block}]"
        return self.message

    def __reduce__(self):
        """This makes the Exception pickleable."""
        return self.__class__, (self.message, self.block)


class DomainError(LRDError, ValueError):
    """Evaluation outside the domain of a spectral or fractional formula."""


class ConstraintError(LRDError, ValueError):
    """Parameters outside the feasible sieve parameter set."""


class ConfigurationError(LRDError, ValueError):
    """Inconsistent block, window or test configuration."""


class DataError(LRDError, ValueError):
    """Input series that cannot be used, with the offending line numbers."""

    def __init__(self, message="", block=None, lines=()):
        self.lines = tuple(lines)
        super().__init__(message, block)

    def __reduce__(self):
        return self.__class__, (self.message, self.block, self.lines)


class NumericalError(LRDError, ArithmeticError):
    """A quadrature, objective or density value was not finite."""


class ConditioningError(NumericalError):
    """Fisher information matrix too badly conditioned to invert."""

    def __init__(self, message="", block=None, condition=None):
        self.condition = condition
        super().__init__(message, block)

    def __reduce__(self):
        return self.__class__, (self.message, self.block, self.condition)


class DegenerateBlockError(NumericalError):
    """Residual variance of a block is (numerically) zero."""


class EstimationError(LRDError, RuntimeError):
    """No optimizer start converged.

    ``best`` holds the best point found (a ``SieveParams``) and
    ``diagnostics`` one dict per start.
    """

    def __init__(self, message="", block=None, best=None, diagnostics=()):
        self.best = best
        self.diagnostics = list(diagnostics)
        super().__init__(message, block)

    def __reduce__(self):
        return self.__class__, (self.message, self.block, self.best, self.diagnostics)


class GenerationError(LRDError, ValueError):
    """A simulator met an invalid coefficient at rescaled time ``u``."""

    def __init__(self, message="", block=None, u=None):
        self.u = u
        super().__init__(message, block)

    def __reduce__(self):
        return self.__class__, (self.message, self.block, self.u)


class MonteCarloError(LRDError, RuntimeError):
    """Too many Monte Carlo replications failed."""


@decorator
def with_block_provenance(func, *args, **kwargs):
    """Stamp the block index onto errors raised by a per-block function.

    The wrapped function must take the block index ``j`` as its first
    positional argument.
    """
    try:
        return func(*args, **kwargs)
    except LRDError as e:
        if e.block is None:
            e.block = args[0] if args else kwargs.get("j")
        logger.debug(f"{func.__name__} failed on block {e.block}: {e.message}")
        raise
