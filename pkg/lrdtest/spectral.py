"""
Spectral densities of the FARIMA(k, d, 0) sieve, their parameter gradients
and the Fisher information matrix Gamma_k.

The sieve density is

    f(lambda) = |1 - e^{i lambda}|^{-2d} / (2 pi |1 + sum_j a_j e^{-i lambda j}|^2)

and everything here is written in cosines only, so every function is even
in the frequency.
"""
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg

from .errors import ConditioningError, ConfigurationError, ConstraintError, DomainError, NumericalError

logger = logging.getLogger("lrdtest.spectral")

D_MAX = 0.49
PACF_BOUND = 0.99
EPS_STAB = 1e-3
MAX_CONDITION = 1e12
DEFAULT_QUADRATURE_SIZE = 4096
PEAK_WIDTH = 0.25
PEAK_GROWTH = 1.25
GRADED_LEVELS = 30

# integrals of log(x) and log(x)**2 over (0, pi]
_INT_LOG = math.pi * (math.log(math.pi) - 1.0)
_INT_LOG2 = math.pi * (math.log(math.pi) ** 2 - 2.0 * math.log(math.pi) + 2.0)


def _root_scale(k, margin):
    # a_j = b_j (1 + margin)^{-j} pushes every root of B out by 1 + margin
    return (1.0 + margin) ** -np.arange(1.0, k + 1)


def pacf_to_ar(pacf, margin=0.0):
    """Coefficients a_1..a_k of ``1 + a_1 z + ... + a_k z^k`` from partial
    autocorrelations (forward Durbin-Levinson recursion).

    With ``margin > 0`` the polynomial is rescaled so that its roots lie
    outside the disk of radius ``1 + margin``.
    """
    phi = np.zeros(0)
    for r in np.asarray(pacf, dtype=float):
        phi = np.concatenate([phi - r * phi[::-1], [r]])
    return -phi * _root_scale(len(phi), margin)


def ar_to_pacf(ar, margin=0.0):
    """Partial autocorrelations of the AR polynomial ``1 + sum_j a_j z^j``
    (inverse of ``pacf_to_ar`` with the same margin).

    Raises ``ConstraintError`` when the polynomial is not stable, i.e. when a
    step of the step-down recursion meets a partial autocorrelation of
    modulus >= 1. With ``margin > 0``, stable means no root within the disk
    of radius ``1 + margin``.
    """
    phi = -np.asarray(ar, dtype=float) / _root_scale(len(ar), margin)
    pacf = np.zeros(len(phi))
    for m in range(len(phi), 0, -1):
        r = phi[m - 1]
        if not abs(r) < 1.0:
            raise ConstraintError(f"AR polynomial {list(ar)} is not stable")
        pacf[m - 1] = r
        head = phi[: m - 1]
        phi = (head + r * head[::-1]) / (1.0 - r * r)
    return pacf


def pacf_jacobian(pacf, margin=0.0):
    """AR coefficients and their Jacobian with respect to the PACF vector
    (the map ``pacf_to_ar(pacf, margin)``).

    Returns
    -------
    ar: array of shape (k,)
    jac: array of shape (k, k), ``jac[i, m] = d a_{i+1} / d pacf_{m+1}``
    """
    pacf = np.asarray(pacf, dtype=float)
    k = len(pacf)
    phi = np.zeros(0)
    jac = np.zeros((0, k))
    for m, r in enumerate(pacf):
        unit = np.zeros(k)
        unit[m] = 1.0
        jac = np.vstack([jac - r * jac[::-1] - np.outer(phi[::-1], unit), unit])
        phi = np.concatenate([phi - r * phi[::-1], [r]])
    scale = _root_scale(k, margin)
    return -phi * scale, -jac * scale[:, None]


def durbin_levinson(acvf, k):
    """Partial autocorrelations 1..k from autocovariances gamma(0..k).

    Stops early (remaining entries 0) when the recursion degenerates.
    """
    acvf = np.asarray(acvf, dtype=float)
    pacf = np.zeros(k)
    if k == 0 or acvf[0] <= 0:
        return pacf
    phi = np.zeros(0)
    v = acvf[0]
    for m in range(1, k + 1):
        r = (acvf[m] - phi @ acvf[m - 1 : 0 : -1]) / v
        if not abs(r) < 1.0 or not np.isfinite(r):
            break
        pacf[m - 1] = r
        phi = np.concatenate([phi - r * phi[::-1], [r]])
        v *= 1.0 - r * r
    return pacf


@dataclass(frozen=True)
class SieveParams:
    """Block parameter vector theta_k = (d, a_1, ..., a_k).

    ``d`` must lie in [-D_MAX, D_MAX]; the estimator further restricts it to
    [d_min, D_MAX]. The AR part is the image of a partial autocorrelation
    vector in [-PACF_BOUND, PACF_BOUND]^k under ``pacf_to_ar(., EPS_STAB)``,
    so every root of the AR polynomial lies outside the disk of radius
    1 + EPS_STAB.
    """

    d: float = 0.0
    ar: tuple = ()
    _pacf: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "ar", tuple(float(a) for a in np.ravel(self.ar)))
        if not np.isfinite(self.d) or not np.all(np.isfinite(self.ar)):
            raise ConstraintError(f"non-finite sieve parameters {self.as_vector()}")
        if abs(self.d) > D_MAX + 1e-12:
            raise ConstraintError(f"memory parameter d={self.d} outside [-{D_MAX}, {D_MAX}]")
        if self._pacf is None:
            # raises inside the stability margin
            pacf = ar_to_pacf(self.ar, EPS_STAB)
            if np.any(np.abs(pacf) > PACF_BOUND + 1e-9):
                raise ConstraintError(
                    f"AR coefficients {list(self.ar)} outside the partial autocorrelation box"
                )
            object.__setattr__(self, "_pacf", tuple(pacf))

    @classmethod
    def from_pacf(cls, d, pacf=()):
        """Parameters from optimizer coordinates; the box is checked on the
        partial autocorrelations themselves."""
        pacf = np.ravel(np.asarray(pacf, dtype=float))
        if not np.all(np.isfinite(pacf)):
            raise ConstraintError(f"non-finite partial autocorrelations {pacf.tolist()}")
        if np.any(np.abs(pacf) > PACF_BOUND + 1e-12):
            raise ConstraintError(
                f"partial autocorrelations {pacf.tolist()} outside [-{PACF_BOUND}, {PACF_BOUND}]"
            )
        return cls(d, tuple(pacf_to_ar(pacf, EPS_STAB)), tuple(pacf))

    @property
    def k(self):
        return len(self.ar)

    @property
    def pacf(self):
        """Partial autocorrelations in the box, the optimizer coordinates."""
        return np.array(self._pacf, dtype=float)

    @property
    def min_root_modulus(self):
        """Smallest modulus among the roots of the AR polynomial (inf if k=0)."""
        if not self.k:
            return math.inf
        return float(np.min(np.abs(self.roots)))

    @property
    def roots(self):
        # np.roots wants the highest power first
        return np.roots(np.r_[self.ar[::-1], 1.0]) if self.k else np.zeros(0, dtype=complex)

    def as_vector(self):
        return np.r_[self.d, self.ar]

    def padded(self, k):
        """The same model written as an order-k sieve member (k >= self.k)."""
        if k < self.k:
            raise ConfigurationError(f"cannot pad order {self.k} down to {k}")
        return SieveParams(self.d, self.ar + (0.0,) * (k - self.k), self._pacf + (0.0,) * (k - self.k))


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes in (0, pi] and weights summing to pi.

    Integrals over [-pi, pi] of even integrands are twice the grid sum.
    Composite rules also keep their panel ``breaks`` so they can be refined
    around spectral peaks.
    """

    nodes: np.ndarray
    weights: np.ndarray
    breaks: np.ndarray = None
    order: int = 4

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or not len(nodes):
            raise ConfigurationError("quadrature nodes and weights must be 1-d and equally long")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigurationError("quadrature nodes must be strictly increasing")
        if not 0 < nodes[0] or nodes[-1] > math.pi:
            raise ConfigurationError(
                f"quadrature nodes must lie in (0, pi], got [{nodes[0]}, {nodes[-1]}]"
            )
        if abs(weights.sum() - math.pi) > 1e-10:
            raise ConfigurationError(f"quadrature weights sum to {weights.sum()}, not pi")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.breaks is not None:
            breaks = np.array(self.breaks, dtype=float)
            breaks.flags.writeable = False
            object.__setattr__(self, "breaks", breaks)

    @property
    def size(self):
        return len(self.nodes)

    @classmethod
    def composite(cls, breaks, order=4):
        """Gauss-Legendre rule of the given order on every panel between
        consecutive ``breaks`` (0 = breaks[0] < ... < breaks[-1] = pi)."""
        breaks = np.asarray(breaks, dtype=float)
        if breaks[0] != 0 or breaks[-1] != math.pi or np.any(np.diff(breaks) <= 0):
            raise ConfigurationError("panel breaks must increase from 0 to pi")
        base, base_weights = np.polynomial.legendre.leggauss(order)
        h = np.diff(breaks)[:, None]
        nodes = (breaks[:-1, None] + h * (base + 1.0) / 2.0).ravel()
        weights = (h * base_weights / 2.0).ravel()
        return cls(nodes, weights, breaks, order)

    @classmethod
    def gauss_legendre(cls, q=DEFAULT_QUADRATURE_SIZE, order=4):
        """Composite Gauss-Legendre rule: q // order equal panels on (0, pi].

        With order <= 4 the smallest node stays above pi / (4 q).
        """
        if q % order:
            raise ConfigurationError(f"quadrature size {q} is not a multiple of the order {order}")
        panels = q // order
        breaks = math.pi * np.arange(panels + 1) / panels
        return cls.composite(breaks, order)

    def refined(self, peaks):
        """The same rule with extra panels graded towards each peak.

        Parameters
        ----------
        peaks: sequence of (center, width)
            Within two widths of a center the panels are width / 4 wide;
            further out they grow geometrically by ``PEAK_GROWTH`` until they
            are as coarse as the base panels.
            The first panel is also split geometrically towards 0, where the
            memory term carries a log(lambda) weight.
        """
        if self.breaks is None or not len(peaks):
            return self
        coarse = 4 * np.max(np.diff(self.breaks))
        pieces = [self.breaks]
        for center, width in peaks:
            offsets = list(width * np.arange(9) / 4)
            while offsets[-1] < coarse:
                offsets.append(offsets[-1] * PEAK_GROWTH)
            offsets = np.array(offsets)
            pieces += [center - offsets, center + offsets]
        breaks = np.unique(np.clip(np.concatenate(pieces), 0.0, math.pi))
        breaks = breaks[np.r_[True, np.diff(breaks) > 1e-13]]
        breaks[-1] = math.pi
        breaks = np.r_[0.0, breaks[1] * 0.5 ** np.arange(GRADED_LEVELS, 0, -1), breaks[1:]]
        return QuadratureGrid.composite(breaks, self.order)


@lru_cache(maxsize=8)
def default_grid(q=DEFAULT_QUADRATURE_SIZE):
    return QuadratureGrid.gauss_legendre(q)


def spectral_peaks(params, max_width=PEAK_WIDTH):
    """(center, width) of the peaks of 1 / |A(lambda)|^2 on [0, pi].

    A root z of the AR polynomial puts a peak at |arg z| whose width is
    log |z|; only peaks narrower than ``max_width`` are returned.
    """
    roots = params.roots
    widths = np.log(np.abs(roots))
    keep = widths < max_width
    return [(float(abs(np.angle(z))), float(w)) for z, w in zip(roots[keep], widths[keep])]


def _frequencies(lam, d=0.0, allow_zero=True):
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)) or np.any(np.abs(lam) > math.pi + 1e-12):
        raise DomainError("frequencies must be finite and inside [-pi, pi]")
    if np.any(lam == 0) and (d != 0 or not allow_zero):
        raise DomainError("spectral density has a pole (or zero) at frequency 0")
    return lam


def _ar_terms(ar, lam):
    """|A(lambda)|^2 and the AR components of the log-density gradient."""
    a = np.r_[1.0, ar]
    k = len(ar)
    lags = np.arange(k + 1)
    cosines = np.cos(np.multiply.outer(lam, lags))
    acf = np.array([a[: k + 1 - h] @ a[h:] for h in lags])
    power = cosines @ (acf * np.where(lags > 0, 2.0, 1.0))
    if not k:
        return power, np.zeros(lam.shape + (0,))
    # sum_m a_m cos(lambda (m - j)), j = 1..k
    distance = np.abs(lags[None, :] - lags[1:, None])
    partial = np.einsum("...jm,m->...j", cosines[..., distance], a)
    return power, -2.0 * partial / power[..., None]


def eval_density(params, lam):
    """Sieve spectral density f_theta at frequency (or array of frequencies) lam."""
    lam = _frequencies(lam, params.d)
    power, _ = _ar_terms(params.ar, lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.power(2.0 - 2.0 * np.cos(lam), -params.d) / (2 * math.pi * power)
    if not np.all(np.isfinite(f)) or np.any(f <= 0):
        raise NumericalError(f"spectral density not finite and positive for {params}")
    return float(f) if np.ndim(f) == 0 else f


def log_density(params, lam):
    lam = _frequencies(lam, params.d)
    power, _ = _ar_terms(params.ar, lam)
    with np.errstate(divide="ignore"):
        out = -params.d * np.log(2.0 - 2.0 * np.cos(lam)) - np.log(2 * math.pi * power)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"log spectral density not finite for {params}")
    return out


def grad_log_density(params, lam):
    """Gradient of log f_theta(lam) with respect to (d, a_1, ..., a_k).

    Note that grad f^{-1} = -f^{-1} grad log f.
    """
    lam = _frequencies(lam, allow_zero=False)
    _, ar_part = _ar_terms(params.ar, lam)
    d_part = -np.log(2.0 - 2.0 * np.cos(lam))
    return np.concatenate([d_part[..., None], ar_part], axis=-1)


def _smooth_log_gradient(params, lam):
    """grad log f with the log(lambda) singularity removed from the d entry.

    grad log f = -2 log(lambda) e_1 + s(lambda), s smooth on [0, pi].
    """
    _, ar_part = _ar_terms(params.ar, lam)
    # 2 sin(x/2) / x == sinc(x / 2pi)
    d_part = -2.0 * np.log(np.sinc(lam / (2 * math.pi)))
    return np.concatenate([d_part[..., None], ar_part], axis=-1)


def _log_weighted_moments(params, grid):
    """(int log(x) s(x) dx, int s(x) dx, s(x) at the grid) over (0, pi],
    with ``grid`` already refined for ``params``."""
    lam, w = grid.nodes, grid.weights
    smooth = _smooth_log_gradient(params, lam)
    at_zero = _smooth_log_gradient(params, np.zeros(1))[0]
    log_moment = (w * np.log(lam)) @ (smooth - at_zero) + at_zero * _INT_LOG
    return log_moment, w @ smooth, smooth


def integrate_log_gradient(params, grid=None):
    """int_0^pi grad log f_theta(lambda) d lambda."""
    grid = (grid or default_grid()).refined(spectral_peaks(params))
    _, plain, _ = _log_weighted_moments(params, grid)
    out = plain.copy()
    out[0] += -2.0 * _INT_LOG
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"non-finite gradient integral for {params}")
    return out


def gamma_matrix(params, grid=None):
    """Fisher information Gamma_k(theta) = (1/4pi) int grad log f (grad log f)^T.

    The log(lambda) and log(lambda)^2 parts of the d row are integrated in
    closed form, the smooth remainder by the grid, refined around the AR
    spectral peaks.
    """
    grid = (grid or default_grid()).refined(spectral_peaks(params))
    log_moment, _, smooth = _log_weighted_moments(params, grid)
    unit = np.zeros(params.k + 1)
    unit[0] = 1.0
    half = (
        4.0 * _INT_LOG2 * np.outer(unit, unit)
        - 2.0 * (np.outer(unit, log_moment) + np.outer(log_moment, unit))
        + (smooth * grid.weights[:, None]).T @ smooth
    )
    gamma = half / (2 * math.pi)
    gamma = (gamma + gamma.T) / 2.0
    if not np.all(np.isfinite(gamma)):
        raise NumericalError(f"non-finite Fisher information for {params}")
    smallest = np.linalg.eigvalsh(gamma)[0]
    if smallest <= 0:
        raise ConditioningError(
            f"Fisher information for {params} is not positive definite "
            f"(smallest eigenvalue {smallest:g})",
            condition=math.inf,
        )
    return gamma


GammaInverse = namedtuple("GammaInverse", ["matrix", "w11"])


def gamma_inverse(params, grid=None, gamma=None):
    """Inverse of Gamma_k(theta) by Cholesky solve, and its (1, 1) entry."""
    if gamma is None:
        gamma = gamma_matrix(params, grid)
    condition = np.linalg.cond(gamma)
    if not condition < MAX_CONDITION:
        raise ConditioningError(
            f"Fisher information for {params} has condition number {condition:.3g}",
            condition=condition,
        )
    factor = linalg.cho_factor(gamma, lower=True)
    inverse = linalg.cho_solve(factor, np.eye(len(gamma)))
    inverse = (inverse + inverse.T) / 2.0
    if not inverse[0, 0] > 0:
        raise ConditioningError(f"non-positive variance factor for {params}", condition=condition)
    return GammaInverse(inverse, float(inverse[0, 0]))
