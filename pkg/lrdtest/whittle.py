"""
Local Whittle estimation of the FARIMA(k, d, 0) sieve on blocks, and AIC
order selection on the full-sample periodogram.
"""
import logging
import math
import os
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from .errors import ConfigurationError, ConstraintError, EstimationError, NumericalError, with_block_provenance
from .periodogram import LocalMean, default_window, full_periodogram, local_periodogram
from .spectral import (
    D_MAX,
    EPS_STAB,
    PACF_BOUND,
    SieveParams,
    durbin_levinson,
    grad_log_density,
    log_density,
    pacf_jacobian,
)

logger = logging.getLogger("lrdtest.whittle")

GTOL = 1e-6
PENALTIES = {"unit": 1.0, "classical": 2.0}
YULE_WALKER_CLIP = 0.95


def default_workers():
    """Worker cap from LRD_THREADS, else the number of available cores."""
    threads = os.environ.get("LRD_THREADS")
    if threads:
        return max(1, int(threads))
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass
class BlockFit:
    """Minimizer of the local Whittle objective on one block.

    ``likelihood`` is the attained objective in the units of the data,
    ``grad_norm`` the norm of the projected gradient in (d, PACF)
    coordinates, ``scale`` the profiled innovation scale (1 when not
    profiling).
    """

    params: SieveParams
    likelihood: float
    grad_norm: float
    n_restarts_used: int
    converged: bool
    j: int = 1
    u: float = 0.5
    scale: float = 1.0
    degenerate: bool = False
    diagnostics: list = field(default_factory=list, repr=False)

    @property
    def d(self):
        return self.params.d

    @property
    def k(self):
        return self.params.k


def _objective(ordinates, logf, profile):
    ratio = ordinates * np.exp(-logf)
    if profile:
        return 0.5 * (np.log(ratio.mean()) + logf.mean() + 1.0)
    return 0.5 * np.mean(logf + ratio)


def whittle_objective(params, pgram, profile=True):
    """Discrete local Whittle objective.

    Unprofiled: ``(1 / 2n) sum_p [log f(lambda_p) + I(lambda_p) / f(lambda_p)]``
    over the n = N//2 positive Fourier frequencies.

    Profiled: the same objective at the best multiplicative innovation
    scale, ``(1/2) [log s + mean log f + 1]`` with ``s = mean(I / f)``.
    """
    logf = log_density(params, pgram.frequencies)
    with np.errstate(divide="ignore"):
        value = _objective(pgram.ordinates, logf, profile)
    if np.isnan(value):
        raise NumericalError(f"Whittle objective not defined at {params}", block=pgram.j)
    return float(value)


class _WhittleProblem:
    """Objective and gradient in optimizer coordinates x = (d, pacf_1..pacf_k)."""

    def __init__(self, pgram, k, profile):
        self.lam = pgram.frequencies
        self.k = k
        self.profile = profile
        ordinates = pgram.ordinates
        # profiled fits are invariant under a rescaling of I; work with mean 1
        self.offset = math.log(ordinates.mean()) / 2 if profile else 0.0
        self.ordinates = ordinates / ordinates.mean() if profile else ordinates
        self.evaluations = 0

    def params(self, x):
        return SieveParams.from_pacf(x[0], x[1:])

    def __call__(self, x):
        self.evaluations += 1
        params = self.params(x)
        _, jac = pacf_jacobian(x[1:], EPS_STAB)
        logf = log_density(params, self.lam)
        grad = grad_log_density(params, self.lam)
        ratio = self.ordinates * np.exp(-logf)
        if self.profile:
            s = ratio.mean()
            value = 0.5 * (math.log(s) + logf.mean() + 1.0)
            g = 0.5 * (grad.mean(axis=0) - (ratio @ grad) / (len(ratio) * s))
        else:
            value = 0.5 * np.mean(logf + ratio)
            g = 0.5 * ((1.0 - ratio) @ grad) / len(ratio)
        g_x = np.r_[g[0], jac.T @ g[1:]]
        if not np.isfinite(value) or not np.all(np.isfinite(g_x)):
            raise NumericalError(f"Whittle objective not finite at {params}")
        return value, g_x

    def scale(self, params):
        """Profiled innovation scale mean(I / f) in the units of the data."""
        ratio = self.ordinates * np.exp(-log_density(params, self.lam))
        return float(ratio.mean() * math.exp(2 * self.offset)) if self.profile else 1.0


def _projected_gradient(x, g, lower, upper, tol=1e-10):
    g = g.copy()
    g[(x <= lower + tol) & (g > 0)] = 0.0
    g[(x >= upper - tol) & (g < 0)] = 0.0
    return g


def _newton_polish(problem, x, value, g, lower, upper, steps=6, h=1e-6):
    """Projected Newton steps on the free coordinates, using a forward
    difference Hessian of the analytic gradient."""
    pg = np.linalg.norm(_projected_gradient(x, g, lower, upper))
    for _ in range(steps):
        free = _projected_gradient(x, g, lower, upper) != 0
        if not free.any() or pg < GTOL * 1e-4:
            break
        idx = np.flatnonzero(free)
        hess = np.empty((len(idx), len(idx)))
        for col, i in enumerate(idx):
            step = h if x[i] + h <= upper[i] else -h
            shifted = x.copy()
            shifted[i] += step
            hess[:, col] = (problem(shifted)[1][idx] - g[idx]) / step
        hess = (hess + hess.T) / 2
        try:
            delta = linalg.cho_solve(linalg.cho_factor(hess), g[idx])
        except linalg.LinAlgError:
            break
        candidate = x.copy()
        candidate[idx] -= delta
        candidate = np.clip(candidate, lower, upper)
        new_value, new_g = problem(candidate)
        new_pg = np.linalg.norm(_projected_gradient(candidate, new_g, lower, upper))
        if new_pg >= pg or new_value > value + 1e-12 * max(1.0, abs(value)):
            break
        x, value, g, pg = candidate, new_value, new_g, new_pg
    return x, value, g


def _acvf_from_periodogram(pgram, k):
    """Autocovariances 0..k implied by the positive-frequency ordinates."""
    weights = np.ones(pgram.n)
    if pgram.N % 2 == 0:
        weights[-1] = 0.5
    lags = np.arange(k + 1)
    cosines = np.cos(np.multiply.outer(pgram.frequencies, lags))
    return 4 * np.pi / pgram.N * (weights * pgram.ordinates) @ cosines


def _starts(pgram, k, d_min, starts):
    def clip_d(d):
        return min(max(d, d_min), D_MAX)

    zero = np.zeros(k)
    out = [np.r_[clip_d(d), zero] for d in (0.0, 0.25, 0.45)]
    if k:
        pacf = durbin_levinson(_acvf_from_periodogram(pgram, k), k)
        pacf = np.clip(pacf, -YULE_WALKER_CLIP, YULE_WALKER_CLIP)
        out += [np.r_[clip_d(d), pacf] for d in (0.0, 0.25)]
    for start in starts:
        start = start.padded(k)
        out.append(np.r_[clip_d(start.d), np.clip(start.pacf, -PACF_BOUND, PACF_BOUND)])
    unique = []
    for x in out:
        if not any(np.allclose(x, y, rtol=0, atol=1e-12) for y in unique):
            unique.append(x)
    return unique


def fit_block(pgram, k, profile=True, d_min=0.0, starts=(), gtol=GTOL, maxiter=500):
    """Minimize the local Whittle objective of one block over the sieve.

    Parameters
    ----------
    pgram: LocalPeriodogram
    k: int
        Sieve order, with k + 1 < N // 2.
    profile: bool
        Profile out the innovation scale (see ``whittle_objective``).
    d_min: float
        Lower end of the d interval [d_min, D_MAX]; in [-D_MAX, 0].
    starts: sequence of SieveParams
        Extra starting points (of order <= k) tried after the fixed ones.
    gtol: float
        Convergence threshold on the projected gradient norm.

    Returns
    -------
    BlockFit of the best converged start.

    Raises
    ------
    EstimationError
        When no start converges; carries the best point found.
    """
    if k < 0 or k + 1 >= pgram.n:
        raise ConfigurationError(
            f"order k={k} needs k + 1 < {pgram.n} (half the block length)", block=pgram.j
        )
    if not -D_MAX <= d_min <= 0:
        raise ConfigurationError(f"d_min={d_min} must lie in [-{D_MAX}, 0]")

    if not np.any(pgram.ordinates > 0):
        logger.warning(f"block {pgram.j} has an all-zero periodogram; using the flat fit")
        params = SieveParams(min(max(0.0, d_min), D_MAX), (0.0,) * k)
        with np.errstate(divide="ignore"):
            value = _objective(pgram.ordinates, log_density(params, pgram.frequencies), profile)
        return BlockFit(params, float(value), 0.0, 0, True, pgram.j, pgram.u, 0.0, degenerate=True)

    problem = _WhittleProblem(pgram, k, profile)
    lower = np.r_[d_min, -PACF_BOUND * np.ones(k)]
    upper = np.r_[D_MAX, PACF_BOUND * np.ones(k)]
    bounds = list(zip(lower, upper))

    best = None
    diagnostics = []
    candidates = _starts(pgram, k, d_min, starts)
    for i, x0 in enumerate(candidates):
        try:
            res = optimize.minimize(
                problem,
                x0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": maxiter, "ftol": 1e-15, "gtol": gtol * 1e-2},
            )
            x, value, g = _newton_polish(problem, res.x, res.fun, res.jac, lower, upper)
        except (NumericalError, ConstraintError) as e:
            logger.debug(f"block {pgram.j}, k={k}: start {i} failed: {e}")
            diagnostics.append({"start": x0.tolist(), "error": str(e)})
            continue
        pg = float(np.linalg.norm(_projected_gradient(x, g, lower, upper)))
        converged = bool(pg < gtol)
        diagnostics.append(
            {
                "start": x0.tolist(),
                "x": x.tolist(),
                "value": float(value),
                "grad_norm": pg,
                "converged": converged,
                "nit": int(res.nit),
                "message": str(res.message),
            }
        )
        logger.debug(f"block {pgram.j}, k={k}: start {i} -> {x} value={value:.12g} pg={pg:.3g}")
        key = (converged, -value)
        if best is None or key > best[0]:
            best = (key, x, value, pg, converged)

    if best is None or not best[4]:
        found = problem.params(best[1]) if best is not None else None
        raise EstimationError(
            f"no start converged for k={k} ({len(candidates)} tried)",
            block=pgram.j,
            best=found,
            diagnostics=diagnostics,
        )
    _, x, value, pg, _ = best
    params = problem.params(x)
    return BlockFit(
        params,
        float(value + problem.offset),
        pg,
        len(candidates),
        True,
        pgram.j,
        pgram.u,
        problem.scale(params),
        diagnostics=diagnostics,
    )


def aic_criterion(fit, pgram, T, penalty="unit"):
    """``(1/T) sum_j [log h(lambda_j) + I(lambda_j) / h(lambda_j)] + c (k + 1) / T``
    with h = scale * f for profiled fits."""
    if penalty not in PENALTIES:
        raise ConfigurationError(f"unknown AIC penalty {penalty!r}")
    logh = log_density(fit.params, pgram.frequencies) + math.log(fit.scale)
    total = np.sum(logh + pgram.ordinates * np.exp(-logh))
    return float(total / T + PENALTIES[penalty] * (fit.k + 1) / T)


def aic_scores(series, mean_estimate, k_max=5, profile=True, penalty="unit", d_min=0.0):
    """AIC of stationary FARIMA(k, d, 0) fits to the full-sample periodogram,
    k = 0..k_max, as a dict ``{k: score}``.

    Orders whose fit fails are left out (with a warning). Each fit also
    starts from the previous order's optimum.
    """
    pgram = full_periodogram(series, mean_estimate)
    scores = {}
    previous = ()
    for k in range(k_max + 1):
        try:
            fit = fit_block(pgram, k, profile=profile, d_min=d_min, starts=previous)
        except (EstimationError, NumericalError, ConstraintError, ConfigurationError) as e:
            logger.warning(f"AIC: skipping order k={k}: {e}")
            continue
        previous = (fit.params,)
        if fit.degenerate:
            scores[k] = PENALTIES[penalty] * (k + 1) / series.T
        else:
            scores[k] = aic_criterion(fit, pgram, series.T, penalty)
        logger.debug(f"AIC: k={k} score={scores[k]:.10g} d={fit.d:.4f}")
    return scores


def select_order_aic(series, mean_estimate, k_max=5, profile=True, penalty="unit", d_min=0.0):
    """Order k in 0..k_max minimizing the AIC criterion (ties: smallest k)."""
    if k_max < 0:
        raise ConfigurationError(f"k_max={k_max} must be >= 0")
    if k_max == 0:
        return 0
    scores = aic_scores(series, mean_estimate, k_max, profile, penalty, d_min)
    if not scores:
        raise EstimationError(f"AIC: every order 0..{k_max} failed to fit")
    return min(scores, key=lambda k: (scores[k], k))


BlockFits = namedtuple("BlockFits", ["fits", "d_profile", "L"])


@with_block_provenance
def fit_one_block(j, series, mean_estimate, N, k, layout="centered", consistency="parseval", **kwargs):
    pgram = local_periodogram(series, mean_estimate, N, j, layout, consistency)
    return fit_block(pgram, k, **kwargs)


def fit_all_blocks(
    series,
    N,
    k,
    L=None,
    profile=True,
    d_min=0.0,
    layout="centered",
    mean_edge="zero",
    consistency="parseval",
    workers=1,
):
    """Fit every block j = 1..M (M = T / N) with the same order k.

    The local mean mu_hat_L is computed once; ``L`` defaults to
    ``default_window(N, T)``.

    Returns
    -------
    BlockFits(fits, d_profile, L), fits ordered by j and d_profile a list
    of ``{"j", "u", "d"}`` dicts.
    """
    if series.T % N:
        raise ConfigurationError(f"T={series.T} is not a multiple of the block length N={N}")
    M = series.T // N
    L = default_window(N, series.T) if L is None else L
    mean_estimate = LocalMean(series, L, edge=mean_edge)

    def one(j):
        return fit_one_block(
            j, series, mean_estimate, N, k, layout, consistency, profile=profile, d_min=d_min
        )

    if workers > 1 and M > 1:
        with ThreadPoolExecutor(max_workers=min(workers, M)) as pool:
            fits = list(pool.map(one, range(1, M + 1)))
    else:
        fits = [one(j) for j in range(1, M + 1)]
    d_profile = [{"j": fit.j, "u": fit.u, "d": fit.d} for fit in fits]
    return BlockFits(fits, d_profile, L)
