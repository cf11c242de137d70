from typing import Optional

import numpy as np

from .errors import ConfigurationError, NumericalError


class ConsistencyChecker:
    def __init__(self):
        pass

    def update(self, residuals):
        pass

    def validate_ordinates(self, ordinates):
        pass


class ParsevalChecker(ConsistencyChecker):
    """Energy identity of the DFT.

    ``(2 pi / N) sum_p I(lambda_p)`` over all N Fourier frequencies must
    equal ``(1 / N) sum_t x_t^2`` over the mean-corrected block.
    """

    def __init__(self, rtol=1e-8):
        self.rtol = rtol
        self.energy = 0.0
        self.size = 0

    def update(self, residuals):
        residuals = np.asarray(residuals, dtype=float)
        self.energy += float(residuals @ residuals)
        self.size += residuals.size

    def validate_ordinates(self, ordinates):
        ordinates = np.asarray(ordinates, dtype=float)
        if ordinates.size != self.size:
            raise NumericalError(
                f"expected {self.size} periodogram ordinates, got {ordinates.size}"
            )
        if np.any(ordinates < 0):
            raise NumericalError("negative periodogram ordinate")
        expected = self.energy / self.size
        got = 2 * np.pi * ordinates.sum() / self.size
        if abs(got - expected) > self.rtol * max(abs(expected), np.finfo(float).tiny):
            raise NumericalError(f'Expected energy "{expected}". Got "{got}"')


def get_consistency_checker(consistency: Optional[str]) -> ConsistencyChecker:
    if consistency == "parseval":
        return ParsevalChecker()
    elif consistency in (None, "none"):
        return ConsistencyChecker()
    else:
        raise ConfigurationError(f"unknown consistency check {consistency!r}")
