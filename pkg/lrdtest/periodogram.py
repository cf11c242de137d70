"""
Local-window means, mean-corrected local periodograms of blocks and the
full-sample periodogram.

Times are 1-based throughout, as in ``X_{1,T}, ..., X_{T,T}``; every windowed
accessor treats observations outside 1..T as 0.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .checkers import get_consistency_checker
from .errors import ConfigurationError, DataError

logger = logging.getLogger("lrdtest.periodogram")

LAYOUTS = ("centered", "overlap")
MEAN_EDGES = ("zero", "shrink", "linear")


@dataclass(frozen=True, eq=False)
class SeriesView:
    """One observed row X_{1,T}, ..., X_{T,T} of the triangular array."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise DataError(f"a series must be one-dimensional, got shape {values.shape}")
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise DataError("series contains non-finite values", lines=bad + 1)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def T(self):
        return len(self.values)

    def __len__(self):
        return self.T

    def take(self, index):
        """Observations at 1-based times ``index``; 0 outside 1..T."""
        index = np.asarray(index, dtype=int)
        inside = (index >= 1) & (index <= self.T)
        out = np.zeros(index.shape)
        out[inside] = self.values[index[inside] - 1]
        return out

    def truncated(self, T):
        if T > self.T:
            raise ConfigurationError(f"cannot truncate a series of length {self.T} to {T}")
        return SeriesView(self.values[:T])

    def scaled(self, c):
        return SeriesView(self.values * c)


class LocalMean:
    """The local-window estimator mu_hat_L evaluated at integer times.

    ``mu_hat_L(t) = (1/L) sum_{p=0}^{L-1} X_{t - L/2 + 1 + p}``.

    Parameters
    ----------
    series: SeriesView
    L: int
        Even window length, 2 <= L <= T.
    edge: "zero" | "shrink" | "linear"
        With "zero", out-of-range terms contribute 0 and the divisor stays L.
        With "shrink", the mean is taken over the in-range terms only.
        With "linear", a least-squares line through the in-range terms is
        evaluated at t (clipped to 1..T), which removes the first-order bias
        of a one-sided window at the ends of a trending mean.
    """

    def __init__(self, series, L, edge="zero"):
        if edge not in MEAN_EDGES:
            raise ConfigurationError(f"unknown mean edge handling {edge!r}")
        if L % 2 or not 2 <= L <= series.T:
            raise ConfigurationError(f"window length L={L} must be even and in [2, {series.T}]")
        self.series = series
        self.L = L
        self.edge = edge
        times = np.arange(1, series.T + 1)
        self._cumsum = np.r_[0.0, np.cumsum(series.values)]
        self._cumsum_t = np.r_[0.0, np.cumsum(times * series.values)]

    def _window(self, t):
        T = self.series.T
        lo = np.clip(t - self.L // 2 + 1, 1, T + 1)
        hi = np.clip(t + self.L // 2, 0, T)
        count = np.maximum(hi - lo + 1, 0)
        total = np.where(count > 0, self._cumsum[hi] - self._cumsum[lo - 1], 0.0)
        return lo, hi, count, total

    def _linear(self, t, lo, hi, count, total):
        # fit a + b (s - c) over s = lo..hi, with c the window center
        c = np.clip(t, 1, self.series.T)
        center = (lo + hi) / 2
        spread = (count ** 2 - 1) / 12.0
        moment = np.where(count > 0, self._cumsum_t[hi] - self._cumsum_t[lo - 1], 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            mean = total / count
            slope = (moment / count - center * mean) / spread
        slope = np.where(spread > 0, slope, 0.0)
        return np.where(count > 0, mean + slope * (c - center), 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=int)
        lo, hi, count, total = self._window(t)
        if self.edge == "zero":
            out = total / self.L
        elif self.edge == "shrink":
            out = total / np.maximum(count, 1)
        else:
            out = self._linear(t, lo, hi, count, total)
        return float(out) if out.ndim == 0 else out

    def __repr__(self):
        return f"LocalMean(L={self.L}, edge={self.edge!r})"


def local_window_mean(series, L, t):
    """mu_hat_L at time t with the zero convention outside 1..T."""
    if not 1 <= t <= series.T:
        raise ConfigurationError(f"time {t} outside 1..{series.T}")
    return LocalMean(series, L, edge="zero")(t)


def default_window(N, T):
    """L = N ** 1.05 rounded to the nearest even integer, at least N + 2 and
    at most T."""
    L = 2 * int(np.round(N ** 1.05 / 2))
    L = max(L, N + 2)
    return min(L, T - T % 2)


def block_midpoint(j, N, layout="centered"):
    """Midpoint t_j of block j (1-based).

    "centered" puts the M blocks side by side, t_j = N (j - 1) + N / 2;
    "overlap" uses t_j = (N - 1) j + N / 2 and leans on the zero convention
    for the right end of the last block.
    """
    if layout == "centered":
        return N * (j - 1) + N // 2
    elif layout == "overlap":
        return (N - 1) * j + N // 2
    raise ConfigurationError(f"unknown block layout {layout!r}")


def block_times(j, N, layout="centered"):
    """The N 1-based times t_j - N/2 + 1, ..., t_j + N/2 of block j."""
    return block_midpoint(j, N, layout) - N // 2 + 1 + np.arange(N)


@dataclass(frozen=True, eq=False)
class LocalPeriodogram:
    """Periodogram ordinates I(lambda_p), lambda_p = 2 pi p / N, p = 1..N//2.

    ``t`` and ``u = t / T`` locate the block midpoint in (rescaled) time.
    """

    ordinates: np.ndarray
    N: int
    j: int = 1
    t: int = 0
    u: float = 0.5

    def __post_init__(self):
        ordinates = np.array(self.ordinates, dtype=float)
        if ordinates.shape != (self.N // 2,):
            raise ConfigurationError(
                f"a block of length {self.N} has {self.N // 2} ordinates, got {ordinates.shape}"
            )
        if not np.all(np.isfinite(ordinates)) or np.any(ordinates < 0):
            raise DataError("periodogram ordinates must be finite and nonnegative", block=self.j)
        ordinates.flags.writeable = False
        object.__setattr__(self, "ordinates", ordinates)

    @property
    def frequencies(self):
        return 2 * np.pi * np.arange(1, self.N // 2 + 1) / self.N

    @property
    def n(self):
        return len(self.ordinates)

    def scaled(self, c):
        return LocalPeriodogram(self.ordinates * c, self.N, self.j, self.t, self.u)


def _dft_power(residuals, consistency):
    checker = get_consistency_checker(consistency)
    checker.update(residuals)
    full = np.abs(np.fft.fft(residuals)) ** 2 / (2 * np.pi * len(residuals))
    checker.validate_ordinates(full)
    return full


def local_periodogram(series, mean_estimate, N, j, layout="centered", consistency="parseval"):
    """Mean-corrected local periodogram of block j.

    Parameters
    ----------
    series: SeriesView
        With T = N * M exactly.
    mean_estimate: callable or None
        Maps an array of 1-based times to the local mean there
        (e.g. ``LocalMean``); None means a zero mean.
    N: int
        Even block length.
    j: int
        Block index in 1..M.
    layout: "centered" | "overlap"
        See ``block_midpoint``.
    consistency: "parseval" | "none"
        Check the DFT energy identity of the block.
    """
    if N < 2 or N % 2:
        raise ConfigurationError(f"block length N={N} must be even and >= 2")
    if series.T % N:
        raise ConfigurationError(f"T={series.T} is not a multiple of the block length N={N}")
    M = series.T // N
    if not 1 <= j <= M:
        raise ConfigurationError(f"block index {j} outside 1..{M}")
    times = block_times(j, N, layout)
    residuals = series.take(times)
    if mean_estimate is not None:
        residuals = residuals - mean_estimate(times)
    full = _dft_power(residuals, consistency)
    t = block_midpoint(j, N, layout)
    return LocalPeriodogram(full[1 : N // 2 + 1], N, j=j, t=t, u=t / series.T)


def full_periodogram(series, mean_estimate=None, consistency="parseval"):
    """Mean-corrected periodogram of the whole sample at 2 pi j / T,
    j = 1..T//2, normalized by (2 pi T)^{-1}."""
    T = series.T
    if T < 8:
        raise ConfigurationError(f"the full-sample periodogram needs T >= 8, got {T}")
    times = np.arange(1, T + 1)
    residuals = series.take(times)
    if mean_estimate is not None:
        residuals = residuals - mean_estimate(times)
    full = _dft_power(residuals, consistency)
    return LocalPeriodogram(full[1 : T // 2 + 1], T, j=1, t=T // 2, u=0.5)
