"""
Simulation of locally stationary FARIMA processes and the Monte Carlo
harness for level and power of the test.

A ``TvProcessSpec`` describes X = (1 - B)^{-d(u)} Y with

    Y_t = mu(u) - sum_j a_j(u) Y_{t-j} + e_t + sum_j b_j(u) e_{t-j},  e_t = sigma(u) Z_t

with every coefficient function frozen at u = t / T when the value at t is
generated.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .core import TestConfig, run_test
from .errors import ConfigurationError, DomainError, GenerationError, LRDError, MonteCarloError
from .periodogram import SeriesView
from .whittle import default_workers

logger = logging.getLogger("lrdtest.simulate")

INNOVATIONS = ("gaussian", "student_t")
MIN_BURN_IN = 512
DEFAULT_WINDOW = 1000
MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class FracCoeffs:
    """Coefficients b_0..b_n of (1 - B)^{-d}."""

    d: float
    coeffs: np.ndarray

    @property
    def n(self):
        return len(self.coeffs) - 1


def _frac_weights(d, n):
    # b_k = b_{k-1} (k - 1 + d) / k, accumulated left to right
    k = np.arange(1, n + 1)
    return np.r_[1.0, np.cumprod((k - 1 + d) / k)]


def frac_coeffs(d, n):
    """Fractional integration coefficients ``b_k = Gamma(k + d) / (Gamma(d) Gamma(k + 1))``
    by the multiplicative recursion."""
    if not -0.5 < d < 0.5:
        raise DomainError(f"fractional coefficients need |d| < 0.5, got d={d}")
    if n < 0:
        raise ConfigurationError(f"number of coefficients n={n} must be >= 0")
    return FracCoeffs(float(d), _frac_weights(d, n))


@dataclass(frozen=True)
class TvProcessSpec:
    """Declarative time-varying process.

    Coefficient functions take an array of rescaled times u and return an
    array (or a scalar, broadcast over u). Missing functions are 0 (mean, d,
    AR and MA terms) or 1 (sigma).

    Parameters
    ----------
    mean_fn, d_fn, sigma_fn: callable u -> value
    ar_fns: sequence of callables, a_1(u), ..., a_p(u) in ``1 + sum a_j B^j``
    ma_fns: sequence of callables, b_1(u), ..., b_q(u) in ``1 + sum b_j B^j``
    innovation: "gaussian" | "student_t"
        Student-t innovations with ``df`` degrees of freedom are rescaled to
        unit variance.
    truncation: int or None
        Number of fractional lags; None uses the whole finite past.
    stationary: bool
        Discard a burn-in of max(512, 4 sqrt(T)) values.
    """

    mean_fn: Optional[Callable] = None
    d_fn: Optional[Callable] = None
    ar_fns: Sequence[Callable] = ()
    ma_fns: Sequence[Callable] = ()
    innovation: str = "gaussian"
    df: Optional[float] = None
    sigma_fn: Optional[Callable] = None
    truncation: Optional[int] = None
    stationary: bool = False
    name: str = ""

    def __post_init__(self):
        if self.innovation not in INNOVATIONS:
            raise ConfigurationError(f"unknown innovation law {self.innovation!r}")
        if self.innovation == "student_t" and not (self.df and self.df > 2):
            raise ConfigurationError(f"student_t innovations need df > 2, got {self.df}")
        if self.truncation is not None and self.truncation < 1:
            raise ConfigurationError(f"truncation={self.truncation} must be >= 1")

    def windowed(self, n=DEFAULT_WINDOW):
        """The same process with the fractional filter cut at n lags."""
        return replace(self, truncation=n)


def _evaluate(fn, u, default):
    if fn is None:
        return np.full(u.shape, float(default))
    return np.broadcast_to(np.asarray(fn(u), dtype=float), u.shape).copy()


def _coefficients(spec, u):
    mean = _evaluate(spec.mean_fn, u, 0.0)
    d = _evaluate(spec.d_fn, u, 0.0)
    sigma = _evaluate(spec.sigma_fn, u, 1.0)
    ar = np.array([_evaluate(fn, u, 0.0) for fn in spec.ar_fns]).reshape(len(spec.ar_fns), len(u))
    ma = np.array([_evaluate(fn, u, 0.0) for fn in spec.ma_fns]).reshape(len(spec.ma_fns), len(u))

    bad = np.flatnonzero(~(np.abs(d) < 0.5))
    if bad.size:
        raise GenerationError(f"d(u)={d[bad[0]]} outside (-0.5, 0.5)", u=float(u[bad[0]]))
    bad = np.flatnonzero(~(sigma > 0))
    if bad.size:
        raise GenerationError(f"sigma(u)={sigma[bad[0]]} is not positive", u=float(u[bad[0]]))
    if len(ar):
        # every root of 1 + sum a_j z^j outside the unit disk
        columns, first = np.unique(ar.T, axis=0, return_index=True)
        for column, i in zip(columns, first):
            if np.any(column) and np.min(np.abs(np.roots(np.r_[column[::-1], 1.0]))) <= 1.0:
                raise GenerationError(f"AR polynomial {list(column)} is not stable", u=float(u[i]))
    return mean, d, sigma, ar, ma


def generator(seed, replication=0):
    """Counter-based Philox stream keyed by (seed, replication)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, replication])))


def _innovations(spec, rng, n):
    if spec.innovation == "student_t":
        return rng.standard_t(spec.df, size=n) * math.sqrt((spec.df - 2) / spec.df)
    return rng.standard_normal(n)


def _fractional_integration(y, d, truncation):
    """X_t = sum_{k=0}^{n_t} b_k(d_t) Y_{t-k}, n_t = min(t - 1, truncation)."""
    n = len(y)
    if not np.any(d):
        return y.copy()
    window = n - 1 if truncation is None else min(truncation, n - 1)
    if np.all(d == d[0]):
        b = _frac_weights(d[0], window)
        return np.convolve(y, b)[:n]
    x = np.empty(n)
    for t in range(n):
        lags = min(t, window)
        b = _frac_weights(d[t], lags)
        x[t] = b @ y[t - lags : t + 1][::-1]
    return x


def simulate_tvfarima(spec, T, seed, replication=0):
    """Generate X_{1,T}, ..., X_{T,T}.

    Pre-sample values are 0. Stationary specs discard a burn-in of
    max(512, 4 sqrt(T)) values, evaluated at the coefficients of u = 1/T.
    """
    if T < 2:
        raise ConfigurationError(f"T={T} must be >= 2")
    burn = max(MIN_BURN_IN, int(4 * math.sqrt(T))) if spec.stationary else 0
    times = np.arange(1 - burn, T + 1)
    u = np.maximum(times, 1) / T
    mean, d, sigma, ar, ma = _coefficients(spec, u)

    rng = generator(seed, replication)
    e = sigma * _innovations(spec, rng, len(times))
    w = e.copy()
    for j in range(1, len(ma) + 1):
        w[j:] += ma[j - 1, j:] * e[:-j]
    y = np.empty(len(times))
    p = len(ar)
    for t in range(len(times)):
        acc = w[t] + mean[t]
        for j in range(1, min(p, t) + 1):
            acc -= ar[j - 1, t] * y[t - j]
        y[t] = acc
    x = _fractional_integration(y, d, spec.truncation)
    return SeriesView(x[burn:])


def _farima_d(u):
    return 0.1 + 0.3 * u


NAMED_MODELS = {
    "tvar1_smooth_mean": TvProcessSpec(
        mean_fn=lambda u: 1.2 * u, ar_fns=(lambda u: -0.6 * u,), name="tvar1_smooth_mean"
    ),
    "tvar1_jump_mean": TvProcessSpec(
        mean_fn=lambda u: np.where(u <= 0.5, 0.65, 1.3),
        ar_fns=(lambda u: -0.6 * u,),
        name="tvar1_jump_mean",
    ),
    "tvma1": TvProcessSpec(ma_fns=(lambda u: 0.55 * np.sin(np.pi * u),), name="tvma1"),
    "tvfarima_1_d_0": TvProcessSpec(
        d_fn=_farima_d, ar_fns=(lambda u: 0.2 * u,), name="tvfarima_1_d_0"
    ),
    "tvfarima_0_d_1": TvProcessSpec(
        d_fn=_farima_d, ma_fns=(lambda u: -0.35 * u,), name="tvfarima_0_d_1"
    ),
    "farima_1_d_1": TvProcessSpec(
        d_fn=lambda u: 0.1,
        ar_fns=(lambda u: 0.25,),
        ma_fns=(lambda u: -0.3,),
        stationary=True,
        name="farima_1_d_1",
    ),
    "farima_0_d_0": TvProcessSpec(d_fn=lambda u: 0.3, stationary=True, name="farima_0_d_0"),
    "white_noise": TvProcessSpec(name="white_noise"),
}


def get_model(name):
    try:
        return NAMED_MODELS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown model {name!r}; choose from {', '.join(sorted(NAMED_MODELS))}"
        ) from None


def simulate_named_model(name, T, seed, replication=0):
    return simulate_tvfarima(get_model(name), T, seed, replication)


@dataclass
class MonteCarloResult:
    model: str
    T: int
    N: int
    M: int
    rate_5: float
    rate_10: float
    se_5: float
    se_10: float
    n_reps: int
    n_failed: int
    seconds: float

    COLUMNS = ("model", "T", "N", "M", "rate_5", "rate_10", "se_5", "se_10", "seconds")

    @property
    def se(self):
        return {"rate_5": self.se_5, "rate_10": self.se_10}

    def to_row(self):
        values = [getattr(self, c) for c in self.COLUMNS]
        return "\t".join(f"{v:.4f}" if isinstance(v, float) else str(v) for v in values)


def _replicate(model, T, config, seed, replication):
    """p-value of one replication, or the error that stopped it."""
    series = simulate_named_model(model, T, seed, replication)
    try:
        return run_test(series, config).p_value, None
    except LRDError as e:
        return None, e


def _binomial_se(rate, n):
    return math.sqrt(rate * (1 - rate) / n)


def monte_carlo(model, T, config, n_reps, seed=0, workers=None):
    """Rejection frequencies of the test at the 5% and 10% levels.

    Replication r simulates with the stream keyed by (seed, r), so serial
    and parallel runs agree exactly. Failed replications are dropped when
    they are fewer than 1% of ``n_reps``.

    Parameters
    ----------
    model: str
        Key of ``NAMED_MODELS``.
    T: int
    config: TestConfig
    n_reps: int
    seed: int
    workers: int
        Processes; default ``default_workers()`` (LRD_THREADS).
    """
    if n_reps < 1:
        raise ConfigurationError(f"n_reps={n_reps} must be >= 1")
    get_model(model)
    workers = default_workers() if workers is None else workers
    # block fits stay serial inside each replication
    config = replace(config, workers=1)
    start = time.perf_counter()
    args = [(model, T, config, seed, r) for r in range(n_reps)]
    if workers > 1 and n_reps > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_reps)) as pool:
            outcomes = list(pool.map(_replicate, *zip(*args), chunksize=max(1, n_reps // (4 * workers))))
    else:
        outcomes = [_replicate(*a) for a in args]
    seconds = time.perf_counter() - start

    p_values = np.array([p for p, _ in outcomes if p is not None])
    errors = [e for _, e in outcomes if e is not None]
    for e in errors[:5]:
        logger.warning(f"{model}: replication failed: {e}")
    if errors and len(errors) >= max(1, MAX_FAILURE_RATE * n_reps):
        raise MonteCarloError(f"{len(errors)} of {n_reps} replications of {model} failed: {errors[0]}")
    n = len(p_values)
    rate_5 = float(np.mean(p_values <= 0.05))
    rate_10 = float(np.mean(p_values <= 0.10))
    N, M = config.resolve(T)[1:3]
    return MonteCarloResult(
        model,
        T,
        N,
        M,
        rate_5,
        rate_10,
        _binomial_se(rate_5, n),
        _binomial_se(rate_10, n),
        n_reps,
        len(errors),
        seconds,
    )


def sample_acvf(series, max_lag):
    """``gamma_hat(h) = (1/T) sum_t (X_t - mean)(X_{t+h} - mean)``, h = 0..max_lag."""
    values = series.values if isinstance(series, SeriesView) else np.asarray(series, dtype=float)
    T = len(values)
    if not 0 <= max_lag < T:
        raise ConfigurationError(f"max_lag={max_lag} must lie in [0, T={T})")
    centered = values - values.mean()
    return np.array([centered[: T - h] @ centered[h:] for h in range(max_lag + 1)]) / T
