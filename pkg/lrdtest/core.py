"""
The test of H0: F = 0 against H1: F > 0, F the average memory
int_0^1 d(u) du, built from block-wise sieve fits.
"""
import json
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import special

from .errors import ConfigurationError, DegenerateBlockError, NumericalError, with_block_provenance
from .periodogram import LAYOUTS, MEAN_EDGES, LocalMean, SeriesView, block_times, default_window
from .spectral import D_MAX, DEFAULT_QUADRATURE_SIZE, default_grid, gamma_inverse, integrate_log_gradient
from .whittle import PENALTIES, fit_all_blocks, select_order_aic

logger = logging.getLogger("lrdtest")

MIN_LENGTH = 64
VARIANCE_MODES = ("gaussian", "general", "auto")
KURTOSIS_THRESHOLD = 0.5

ResolvedConfig = namedtuple("ResolvedConfig", ["T", "N", "M", "L", "warnings"])
ResidualMoments = namedtuple("ResidualMoments", ["sigma2_hat", "kappa4_hat"])


@dataclass(frozen=True)
class TestConfig:
    """Options of ``run_test``. Exactly one of ``N`` and ``M`` is given.

    Parameters
    ----------
    N, M: int
        Block length or number of blocks. With M, N = T // M rounded down
        to an even number; the series is truncated to N * M.
    k: int or "aic"
        Sieve order, or AIC selection over 0..k_max.
    L: int
        Local mean window; default ``default_window(N, T)``.
    alpha: float
        Level of the test.
    variance_mode: "gaussian" | "general" | "auto"
        "auto" switches to the general variance when the residual kurtosis
        prescreen fires.
    profile: bool
        Profile the innovation scale out of the Whittle objective.
    d_min: float
        Lower end of the d interval of the estimator.
    layout, mean_edge:
        Block layout and local mean edge handling, see ``lrdtest.periodogram``.
    quadrature_size: int
        Nodes of the Gauss-Legendre grid used for Gamma_k.
    aic_penalty: "unit" | "classical"
        c (k + 1) / T with c = 1 or 2.
    workers: int
        Threads for block fits.
    """

    __test__ = False

    N: Optional[int] = None
    M: Optional[int] = None
    k: Union[int, str] = "aic"
    k_max: int = 5
    L: Optional[int] = None
    alpha: float = 0.05
    variance_mode: str = "gaussian"
    profile: bool = True
    d_min: float = -D_MAX
    layout: str = "centered"
    mean_edge: str = "linear"
    quadrature_size: int = DEFAULT_QUADRATURE_SIZE
    aic_penalty: str = "unit"
    workers: int = 1

    def __post_init__(self):
        if (self.N is None) == (self.M is None):
            raise ConfigurationError("exactly one of N and M must be given")
        if self.N is not None and (self.N < 4 or self.N % 2):
            raise ConfigurationError(f"block length N={self.N} must be even and >= 4")
        if self.M is not None and self.M < 1:
            raise ConfigurationError(f"number of blocks M={self.M} must be >= 1")
        if not (self.k == "aic" or (isinstance(self.k, int) and self.k >= 0)):
            raise ConfigurationError(f"k must be a nonnegative integer or 'aic', got {self.k!r}")
        if self.k_max < 0:
            raise ConfigurationError(f"k_max={self.k_max} must be >= 0")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha={self.alpha} must lie in (0, 1)")
        if self.variance_mode not in VARIANCE_MODES:
            raise ConfigurationError(f"unknown variance mode {self.variance_mode!r}")
        if self.layout not in LAYOUTS:
            raise ConfigurationError(f"unknown block layout {self.layout!r}")
        if self.mean_edge not in MEAN_EDGES:
            raise ConfigurationError(f"unknown mean edge handling {self.mean_edge!r}")
        if self.aic_penalty not in PENALTIES:
            raise ConfigurationError(f"unknown AIC penalty {self.aic_penalty!r}")
        if not -D_MAX <= self.d_min <= 0:
            raise ConfigurationError(f"d_min={self.d_min} must lie in [-{D_MAX}, 0]")

    def resolve(self, T):
        """Concrete (T, N, M, L) for a series of length T, plus warnings."""
        warnings = []
        if self.M is not None:
            M = self.M
            N = T // M
            N -= N % 2
        else:
            N = self.N
            M = T // N
        if N < 4 or M < 1:
            raise ConfigurationError(f"a series of length {T} is too short for N={N}, M={M}")
        used = N * M
        if used < MIN_LENGTH:
            raise ConfigurationError(f"the test needs T >= {MIN_LENGTH} after truncation, got {used}")
        if used < T:
            warnings.append(f"series truncated from T={T} to T={used} (N={N}, M={M})")
        L = default_window(N, used) if self.L is None else self.L
        if L % 2 or not 2 <= L <= used:
            raise ConfigurationError(f"window length L={L} must be even and in [2, {used}]")
        return ResolvedConfig(used, N, M, L, warnings)


@dataclass
class TestReport:
    __test__ = False

    T: int
    N: int
    M: int
    k: int
    L: int
    F_hat: float
    W_hat: float
    variance_mode: str
    statistic: float
    p_value: float
    alpha: float
    reject: bool
    d_profile: list
    warnings: list = field(default_factory=list)
    W_gaussian: float = None
    fits: list = field(default_factory=list, repr=False)

    FIELDS = (
        "T",
        "N",
        "M",
        "k",
        "L",
        "F_hat",
        "W_hat",
        "variance_mode",
        "statistic",
        "p_value",
        "alpha",
        "reject",
        "d_profile",
        "warnings",
    )

    @property
    def critical_value(self):
        return critical_value(self.alpha)

    def to_dict(self):
        out = {name: getattr(self, name) for name in self.FIELDS}
        out["d_profile"] = [
            {"j": int(p["j"]), "u": float(p["u"]), "d": float(p["d"])} for p in self.d_profile
        ]
        out["warnings"] = list(self.warnings)
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_tsv(self):
        """Header line and value line of the scalar fields; the d profile
        follows as ``j u d`` rows."""
        scalars = [name for name in self.FIELDS if name not in ("d_profile", "warnings")]
        lines = ["\t".join(scalars), "\t".join(str(getattr(self, name)) for name in scalars)]
        lines.append("j\tu\td")
        lines += [f"{p['j']}\t{p['u']!r}\t{p['d']!r}" for p in self.d_profile]
        return "\n".join(lines) + "\n"

    def summary(self):
        verdict = "reject" if self.reject else "do not reject"
        return (
            f"T={self.T} N={self.N} M={self.M} k={self.k}: F_hat={self.F_hat:.4f} "
            f"statistic={self.statistic:.3f} p={self.p_value:.4g} -> {verdict} H0 "
            f"at alpha={self.alpha} ({self.variance_mode} variance)"
        )


def critical_value(alpha):
    """Upper alpha quantile u_{1-alpha} of the standard normal."""
    return float(special.ndtri(1 - alpha))


def decide(statistic, alpha):
    """(p_value, reject) of the one-sided test, rejecting when the statistic
    reaches u_{1-alpha}."""
    p_value = float(special.ndtr(-statistic))
    return p_value, bool(statistic >= critical_value(alpha))


def compute_F(d_profile):
    """Average memory estimate F_hat = (1/M) sum_j d_hat(u_j)."""
    d = [p["d"] if isinstance(p, dict) else p for p in d_profile]
    if not d:
        raise ConfigurationError("empty d profile")
    return float(sum(d) / len(d))


@with_block_provenance
def _block_inverse(j, params, grid):
    return gamma_inverse(params, grid)


def compute_W_gaussian(fits, grid=None):
    """``[(1/M) sum_j Gamma_k^{-1}(theta_hat_j)]_{11}``.

    Averages the inverse matrices and the (1, 1) entries separately (same
    summation order) and checks that both agree.
    """
    if not fits:
        raise ConfigurationError("no block fits")
    grid = grid or default_grid()
    inverses = [_block_inverse(fit.j, fit.params, grid) for fit in fits]
    averaged = sum(inv.matrix for inv in inverses) / len(inverses)
    entries = sum(inv.w11 for inv in inverses) / len(inverses)
    if averaged[0, 0] != entries:
        raise NumericalError(f"(1,1) entry {averaged[0, 0]!r} != averaged entries {entries!r}")
    return float(entries)


def residual_moments(series, fit, j, N, mean_estimate=None, layout="centered"):
    """Second raw moment and fourth cumulant of the AR-whitened residuals of
    block j.

    ``Z_t = Xc_t + sum_i a_i Xc_{t-i}`` for t = t_j - N/2 + k + 1, ..., t_j + N/2,
    with Xc the block's mean-corrected observations.
    """
    k = fit.k
    if N <= k + 1:
        raise ConfigurationError(f"block length N={N} too short for order k={k}", block=j)
    times = block_times(j, N, layout)
    centered = series.take(times)
    if mean_estimate is not None:
        centered = centered - mean_estimate(times)
    residuals = np.convolve(centered, np.r_[1.0, fit.params.ar], mode="valid")
    sigma2 = float(np.mean(residuals ** 2))
    m4 = float(np.mean(residuals ** 4))
    return ResidualMoments(sigma2, m4 - 3 * sigma2 ** 2)


def kurtosis_prescreen(moments, threshold=KURTOSIS_THRESHOLD):
    """True when some block has |kappa4 / sigma^4| > threshold."""
    ratios = [abs(m.kappa4_hat) / m.sigma2_hat ** 2 for m in moments if m.sigma2_hat > 0]
    return bool(ratios) and max(ratios) > threshold


def correction_integral(params, grid=None):
    """``int_{-pi}^{pi} f [Gamma^{-1} grad f^{-1}]_1 d lambda``
    ``= -2 sum_m (Gamma^{-1})_{1m} int_0^pi d/d theta_m log f``."""
    grid = grid or default_grid()
    inverse = gamma_inverse(params, grid)
    return float(-2.0 * inverse.matrix[0] @ integrate_log_gradient(params, grid))


def compute_W_general(fits, moments, grid=None, W_gaussian=None):
    """Variance factor for non-Gaussian innovations:
    ``W_hat + (1 / 4 pi M) sum_j kappa4_j / sigma_j^4 * integral_j^2``."""
    if len(fits) != len(moments):
        raise ConfigurationError(f"{len(fits)} fits but {len(moments)} residual moments")
    grid = grid or default_grid()
    if W_gaussian is None:
        W_gaussian = compute_W_gaussian(fits, grid)
    total = 0.0
    for fit, m in zip(fits, moments):
        sigma4 = m.sigma2_hat ** 2
        if not sigma4 > np.finfo(float).tiny:
            raise DegenerateBlockError("residual variance is zero", block=fit.j)
        total += m.kappa4_hat / sigma4 * correction_integral(fit.params, grid) ** 2
    return float(W_gaussian + total / (4 * math.pi * len(fits)))


def run_test(series, config=None, **kwargs):
    """Run the test on a series.

    Parameters
    ----------
    series: SeriesView or array-like
    config: TestConfig
        Or pass the ``TestConfig`` fields as keyword arguments.

    Returns
    -------
    TestReport
    """
    if config is None:
        config = TestConfig(**kwargs)
    elif kwargs:
        raise ConfigurationError("pass either a TestConfig or keyword options, not both")
    if not isinstance(series, SeriesView):
        series = SeriesView(series)
    T, N, M, L, warnings = config.resolve(series.T)
    for w in warnings:
        logger.warning(w)
    series = series.truncated(T)
    grid = default_grid(config.quadrature_size)
    mean_estimate = LocalMean(series, L, edge=config.mean_edge)

    if config.k == "aic":
        k_max = min(config.k_max, N // 2 - 2)
        if k_max < config.k_max:
            warnings.append(f"AIC search capped at k={k_max} by the block length N={N}")
        k = select_order_aic(
            series, mean_estimate, k_max, config.profile, config.aic_penalty, config.d_min
        )
        logger.info(f"AIC selected order k={k}")
    else:
        k = config.k

    fits, d_profile, _ = fit_all_blocks(
        series,
        N,
        k,
        L,
        profile=config.profile,
        d_min=config.d_min,
        layout=config.layout,
        mean_edge=config.mean_edge,
        workers=config.workers,
    )
    F_hat = compute_F(d_profile)
    W_gaussian = compute_W_gaussian(fits, grid)

    mode = config.variance_mode
    W_hat = W_gaussian
    if mode != "gaussian":
        moments = [
            residual_moments(series, fit, fit.j, N, mean_estimate, config.layout) for fit in fits
        ]
        if mode == "auto":
            mode = "general" if kurtosis_prescreen(moments) else "gaussian"
            logger.info(f"variance mode auto -> {mode}")
        if mode == "general":
            W_hat = compute_W_general(fits, moments, grid, W_gaussian)

    statistic = math.sqrt(T) * F_hat / math.sqrt(W_hat)
    p_value, reject = decide(statistic, config.alpha)
    return TestReport(
        T=T,
        N=N,
        M=M,
        k=k,
        L=L,
        F_hat=F_hat,
        W_hat=W_hat,
        variance_mode=mode,
        statistic=statistic,
        p_value=p_value,
        alpha=config.alpha,
        reject=reject,
        d_profile=d_profile,
        warnings=warnings,
        W_gaussian=W_gaussian,
        fits=fits,
    )
