import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from lrdtest.errors import ConditioningError, ConfigurationError, ConstraintError, DomainError
from lrdtest.spectral import (
    D_MAX,
    EPS_STAB,
    PACF_BOUND,
    QuadratureGrid,
    SieveParams,
    ar_to_pacf,
    durbin_levinson,
    eval_density,
    gamma_inverse,
    gamma_matrix,
    grad_log_density,
    integrate_log_gradient,
    log_density,
    pacf_jacobian,
    pacf_to_ar,
    spectral_peaks,
)
from lrdtest.tests.utils import central_difference, gamma_from_psi


@pytest.mark.parametrize(
    "d, ar, lam, expected",
    [
        (0.0, (), 0.7, 1 / (2 * math.pi)),
        (0.0, (), math.pi, 1 / (2 * math.pi)),
        (0.3, (), math.pi, 2 ** -0.6 / (2 * math.pi)),
        (0.0, (0.5,), 0.0, 1 / (2 * math.pi * 1.5 ** 2)),
    ],
)
def test_eval_density(d, ar, lam, expected):
    assert eval_density(SieveParams(d, ar), lam) == pytest.approx(expected, rel=1e-12)


def test_eval_density_vectorized():
    params = SieveParams(0.2, (0.4, -0.2))
    lam = np.linspace(0.1, math.pi, 7)
    out = eval_density(params, lam)
    assert out.shape == lam.shape
    assert np.allclose(out, [eval_density(params, x) for x in lam], rtol=1e-14)
    assert np.allclose(np.log(out), log_density(params, lam), rtol=1e-12)
    # even in the frequency
    assert np.allclose(eval_density(params, -lam), out, rtol=1e-14)


def test_density_domain():
    with pytest.raises(DomainError):
        eval_density(SieveParams(0.2), 0.0)
    with pytest.raises(DomainError):
        eval_density(SieveParams(0.0), 4.0)
    with pytest.raises(DomainError):
        grad_log_density(SieveParams(0.0), 0.0)


def test_grad_log_density_at_pi():
    grad = grad_log_density(SieveParams(0.0), math.pi)
    assert grad.shape == (1,)
    assert grad[0] == pytest.approx(-2 * math.log(2), rel=1e-12)


def random_params(rng, bound=PACF_BOUND, k_max=6):
    k = int(rng.integers(0, k_max + 1))
    return SieveParams.from_pacf(rng.uniform(-0.45, 0.45), rng.uniform(-bound, bound, k))


@pytest.mark.parametrize(
    "theta", [(0.0, ()), (0.2, (0.4,)), (0.35, (0.4, -0.2)), (-0.2, (-0.5, 0.3, 0.1))]
)
def test_grad_log_density_matches_finite_differences(theta):
    d, ar = theta
    lam = np.array([0.05, 0.3, 1.1, 2.9, math.pi])
    x = np.r_[d, ar]

    def logf(v):
        return log_density(SieveParams(v[0], v[1:]), lam)

    numeric = central_difference(logf, x).T
    analytic = grad_log_density(SieveParams(d, ar), lam)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-9)


def test_grad_log_density_random_theta(rng):
    for _ in range(100):
        params = random_params(rng, bound=0.7)
        lam = rng.uniform(0.01, math.pi, 5)

        def logf(v):
            return log_density(SieveParams(v[0], v[1:]), lam)

        numeric = central_difference(logf, params.as_vector()).T
        analytic = grad_log_density(params, lam)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6, err_msg=str(params))


@pytest.mark.parametrize("d", [0.0, 0.1, 0.2, 0.25, 0.45, 0.49])
def test_gamma_pure_memory(d, grid):
    gamma = gamma_matrix(SieveParams(d), grid)
    assert gamma.shape == (1, 1)
    assert gamma[0, 0] == pytest.approx(math.pi ** 2 / 6, abs=1e-6)
    assert abs(gamma[0, 0] - gamma_matrix(SieveParams(0.0), grid)[0, 0]) < 1e-10


@pytest.mark.parametrize("a", [0.5, -0.3, 0.8])
def test_gamma_ar1_entry(a, grid):
    gamma = gamma_matrix(SieveParams(0.0, (a,)), grid)
    assert gamma[1, 1] == pytest.approx(1 / (1 - a * a), rel=1e-8)
    assert np.array_equal(gamma, gamma.T)


def test_gamma_against_adaptive_quadrature(grid):
    params = SieveParams(0.2, (0.4,))
    gamma = gamma_matrix(params, grid)

    def entry(i, j):
        def integrand(lam):
            g = grad_log_density(params, np.array([lam]))[0]
            return g[i] * g[j]

        value, _ = integrate.quad(integrand, 0, math.pi, limit=200, epsabs=1e-12)
        return value / (2 * math.pi)

    for i in range(2):
        for j in range(2):
            assert gamma[i, j] == pytest.approx(entry(i, j), abs=1e-7)


def test_gamma_inverse(grid):
    inv = gamma_inverse(SieveParams(0.3), grid)
    assert inv.w11 == pytest.approx(6 / math.pi ** 2, abs=1e-6)

    params = SieveParams(0.3, (0.5, 0.2))
    gamma = gamma_matrix(params, grid)
    inv = gamma_inverse(params, grid, gamma=gamma)
    np.testing.assert_allclose(inv.matrix @ gamma, np.eye(3), atol=1e-10)
    assert inv.w11 == inv.matrix[0, 0]
    assert np.all(np.linalg.eigvalsh(gamma) > 0)


def test_gamma_inverse_ill_conditioned():
    with pytest.raises(ConditioningError) as e:
        gamma_inverse(SieveParams(0.0, (0.1,)), gamma=np.diag([1.0, 1e-13]))
    assert e.value.condition > 1e12


def test_log_gradient_integrates_to_zero(grid):
    # int log f is free of (d, a), so its gradient integrates to zero
    for params in [SieveParams(0.0), SieveParams(0.3, (0.5,)), SieveParams(-0.1, (0.6, -0.3))]:
        np.testing.assert_allclose(integrate_log_gradient(params, grid), 0, atol=1e-8)


@pytest.mark.parametrize(
    "d, ar",
    [
        (0.5, ()),
        (-0.6, ()),
        (0.2, (1.5,)),
        (0.2, (0.995,)),
        (float("nan"), ()),
    ],
)
def test_sieve_params_constraints(d, ar):
    with pytest.raises(ConstraintError):
        SieveParams(d, ar)


def test_sieve_params():
    params = SieveParams(0.2, [0.5])
    assert params.ar == (0.5,)
    assert params.k == 1
    assert params.min_root_modulus == pytest.approx(2.0)
    assert SieveParams(0.1).min_root_modulus == math.inf
    assert np.array_equal(params.as_vector(), [0.2, 0.5])
    assert params.padded(3).ar == (0.5, 0.0, 0.0)
    assert params.padded(3).pacf.tolist() == pytest.approx([-0.5 * (1 + EPS_STAB), 0, 0])
    assert params.pacf.tolist() == pytest.approx(ar_to_pacf([0.5], EPS_STAB).tolist())
    with pytest.raises(ConfigurationError):
        params.padded(0)
    assert SieveParams(D_MAX).d == D_MAX


def test_pacf_roundtrip():
    pacf = np.array([0.6, -0.4, 0.2])
    ar = pacf_to_ar(pacf)
    np.testing.assert_allclose(ar_to_pacf(ar), pacf, atol=1e-14)
    params = SieveParams.from_pacf(0.1, pacf)
    np.testing.assert_allclose(params.pacf, pacf, atol=1e-14)
    assert params.min_root_modulus > 1 + EPS_STAB
    # PACF box keeps the roots outside 1 + EPS_STAB
    edge = SieveParams.from_pacf(0.0, [0.99, -0.99, 0.99])
    assert edge.min_root_modulus > 1 + EPS_STAB
    np.testing.assert_allclose(ar_to_pacf(edge.ar, EPS_STAB), edge.pacf, atol=1e-10)
    np.testing.assert_allclose(pacf_to_ar(pacf, EPS_STAB), ar / (1 + EPS_STAB) ** np.arange(1, 4))


def test_ar_to_pacf_unstable():
    with pytest.raises(ConstraintError):
        ar_to_pacf([-2.0, 0.5])


def test_pacf_jacobian():
    pacf = np.array([0.5, -0.3, 0.2])
    ar, jac = pacf_jacobian(pacf)
    np.testing.assert_allclose(ar, pacf_to_ar(pacf), atol=1e-15)
    numeric = central_difference(pacf_to_ar, pacf).T
    np.testing.assert_allclose(jac, numeric, atol=1e-8)


def test_durbin_levinson():
    phi = 0.6
    acvf = phi ** np.arange(5) / (1 - phi ** 2)
    np.testing.assert_allclose(durbin_levinson(acvf, 3), [phi, 0, 0], atol=1e-12)
    assert durbin_levinson(np.zeros(3), 2).tolist() == [0, 0]
    assert durbin_levinson(acvf, 0).size == 0


def test_quadrature_grid(grid):
    assert grid.size == 4096
    assert grid.weights.sum() == pytest.approx(math.pi, abs=1e-12)
    assert grid.nodes[0] >= math.pi / (4 * grid.size)
    assert grid.nodes[-1] <= math.pi
    assert not grid.nodes.flags.writeable

    small = QuadratureGrid.gauss_legendre(64)
    assert small.size == 64
    with pytest.raises(ConfigurationError):
        QuadratureGrid.gauss_legendre(65)
    with pytest.raises(ConfigurationError):
        QuadratureGrid([0.5, 0.2], [1.0, math.pi - 1.0])
    with pytest.raises(ConfigurationError):
        QuadratureGrid([0.5, 1.0], [1.0, 1.0])


@pytest.mark.parametrize("k", [5, 6])
def test_pacf_corners(k):
    for signs in itertools.product([-1.0, 1.0], repeat=k):
        pacf = PACF_BOUND * np.array(signs)
        params = SieveParams.from_pacf(0.2, pacf)
        assert params.pacf.tolist() == pacf.tolist()
        assert params.min_root_modulus > (1 + EPS_STAB) * (1 - 1e-10)
        np.testing.assert_allclose(ar_to_pacf(params.ar, EPS_STAB), pacf, atol=1e-5)
        assert params.padded(k + 1).pacf.tolist() == pacf.tolist() + [0.0]


def test_from_pacf_box():
    with pytest.raises(ConstraintError):
        SieveParams.from_pacf(0.0, [0.5, PACF_BOUND + 1e-6])
    with pytest.raises(ConstraintError):
        SieveParams.from_pacf(0.0, [float("nan")])


def test_min_root_modulus_margin(rng):
    for _ in range(200):
        params = random_params(rng)
        assert params.min_root_modulus > (1 + EPS_STAB) * (1 - 1e-10)


def test_spectral_peaks():
    assert spectral_peaks(SieveParams(0.1)) == []
    assert spectral_peaks(SieveParams(0.0, (0.5,))) == []
    params = SieveParams.from_pacf(0.2, [0.8] * 4)
    peaks = spectral_peaks(params)
    center, width = min(peaks, key=lambda p: p[1])
    assert center == pytest.approx(0.0, abs=1e-8)
    assert width == pytest.approx(math.log(params.min_root_modulus))
    assert width > math.log(1 + EPS_STAB) * (1 - 1e-6)


def test_refined_grid(grid):
    assert grid.refined([]) is grid
    peak = (1.0, 1e-3)
    fine = grid.refined([peak])
    assert fine.weights.sum() == pytest.approx(math.pi, abs=1e-12)
    assert fine.size > grid.size
    near = fine.nodes[np.abs(fine.nodes - 1.0) < 2e-3]
    assert np.max(np.diff(near)) < 1e-3
    assert fine.nodes[0] < grid.nodes[0] * 1e-6
    # integral of a narrow Lorentzian
    lorentz = 1e-3 / ((fine.nodes - 1.0) ** 2 + 1e-6)
    exact = math.atan((math.pi - 1.0) / 1e-3) + math.atan(1.0 / 1e-3)
    assert fine.weights @ lorentz == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize(
    "params",
    [
        SieveParams(0.3, (0.5, 0.2)),
        SieveParams.from_pacf(-0.1, [0.6, -0.5, 0.3]),
        SieveParams.from_pacf(0.2, [0.8] * 4),
        SieveParams.from_pacf(0.0, [0.99, -0.99] * 3),
    ],
)
def test_gamma_against_psi_weights(params, grid):
    gamma = gamma_matrix(params, grid)
    expected = gamma_from_psi(params.ar)
    np.testing.assert_allclose(gamma, expected, rtol=1e-6, atol=1e-6 * np.abs(expected).max())


def test_gamma_converges_in_quadrature_size(rng):
    coarse, fine = QuadratureGrid.gauss_legendre(4096), QuadratureGrid.gauss_legendre(8192)
    cases = [SieveParams.from_pacf(0.2, [0.8] * 4), SieveParams.from_pacf(0.0, [0.99] * 6)]
    cases += [random_params(rng) for _ in range(30)]
    for params in cases:
        a, b = gamma_matrix(params, coarse), gamma_matrix(params, fine)
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-6, err_msg=str(params))


def test_gamma_positive_definite(rng, grid):
    for _ in range(50):
        params = random_params(rng)
        gamma = gamma_matrix(params, grid)
        assert np.array_equal(gamma, gamma.T)
        assert np.all(np.linalg.eigvalsh(gamma) > 0), params
