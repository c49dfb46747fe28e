import math

import numpy as np
import pytest
from scipy.special import bernoulli

from eqzero import domain as dom
from eqzero import scaling as sc
from eqzero.errors import NearDiagonal

_B = bernoulli(100)


def d_infinity_bernoulli(tau, terms=50):
    """``(1/pi) (log G)''(x)`` at ``x = 2 tau`` from ``log G = x/2 + sum B_2k x^2k / (2k (2k)!)``."""
    x = 2 * tau
    total = sum(_B[2 * k] * (2 * k - 1) * x ** (2 * k - 2) / math.factorial(2 * k) for k in range(1, terms + 1))
    return total / math.pi


def random_points(rng, n, scale=2.0):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def test_G_values():
    assert sc.eval_G(0.0) == 1
    assert sc.eval_G(0.0, 1) == pytest.approx(0.5, abs=1e-16)
    assert sc.eval_G(0.0, 2) == pytest.approx(1 / 3, abs=1e-16)
    assert sc.eval_G(1.0) == pytest.approx(math.e - 1, rel=1e-15)
    assert sc.eval_G(2j * math.pi) == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        sc.eval_G(1.0, 3)


@pytest.mark.parametrize("order", [0, 1, 2])
def test_series_and_closed_form_agree_at_switch(order):
    z = sc.SERIES_RADIUS * np.exp(1j * np.linspace(0, 2 * np.pi, 37))
    np.testing.assert_allclose(sc._series(z, order), sc._closed(z, order), atol=1e-12, rtol=0)


def test_G_conjugate_symmetry(rng):
    z = random_points(rng, 50)
    for k in range(3):
        np.testing.assert_allclose(np.conj(sc.eval_G(z, k)), sc.eval_G(np.conj(z), k), rtol=1e-14)


def test_G_derivatives_against_differences(rng):
    z = random_points(rng, 20, 1.0)
    h = 1e-5
    for k in (1, 2):
        fd = (sc.eval_G(z + h, k - 1) - sc.eval_G(z - h, k - 1)) / (2 * h)
        np.testing.assert_allclose(sc.eval_G(z, k), fd, atol=1e-8)


def test_d_infinity_origin():
    assert sc.d_infinity(0.0) == pytest.approx(1 / (12 * math.pi), abs=1e-15)


@pytest.mark.parametrize("tau", [0.0, 0.01, 0.1, 0.2499, 0.25, 0.6, 1.2])
def test_d_infinity_against_bernoulli_series(tau):
    assert sc.d_infinity(tau) == pytest.approx(d_infinity_bernoulli(tau), rel=1e-12, abs=1e-15)


def test_d_infinity_against_closed_form():
    tau = np.r_[np.linspace(0.3, 8, 40), -np.linspace(0.3, 8, 40)]
    np.testing.assert_allclose(sc.d_infinity(tau), sc.d_infinity_closed_form(tau), rtol=1e-10)


def test_d_infinity_even_positive_and_decaying():
    tau = np.linspace(-10, 10, 2001)
    D = sc.d_infinity(tau)
    assert np.all(D > 0)
    np.testing.assert_allclose(D, D[::-1], rtol=1e-13)
    # beyond tau ~ 18 the gap tau^2 e^{-2 tau} / pi is below double precision
    t = np.linspace(5, 15, 200)
    gap = np.abs(t**2 * sc.d_infinity(t) - 1 / (4 * math.pi))
    assert np.all(np.diff(gap) < 0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 5.0])
def test_det_identity(alpha):
    m = sc.correlation_matrices(0, 1j * alpha)
    expected = 1 - (math.sin(alpha / 2) / (alpha / 2)) ** 2
    assert m.det_A.real == pytest.approx(expected, abs=1e-12)
    assert abs(m.det_A.imag) < 1e-15
    np.testing.assert_allclose(np.diag(m.A), 1.0)


def test_matrices_hermitian_and_lambda_psd(rng):
    z1, z2 = random_points(rng, 10, 1.0), random_points(rng, 10, 1.0)
    for a, b in zip(z1, z2):
        m = sc.correlation_matrices(a, b)
        for M in (m.A, m.B, m.C, m.Lam):
            np.testing.assert_allclose(M, M.conj().T, atol=1e-13)
        assert np.linalg.eigvalsh(m.Lam).min() > -1e-12


def test_near_diagonal():
    with pytest.raises(NearDiagonal):
        sc.correlation_matrices(0.3j, 0.3j + 1e-6)
    with pytest.raises(NearDiagonal):
        sc.pair_correlation_K2(0.1, 0.1 + 5e-6j)


def test_tangential_anchor_values():
    # 40-digit evaluation of the same formula
    assert sc.kappa(sc.TANGENTIAL, 2.0) == pytest.approx(0.0311392210221, rel=1e-11)
    assert sc.kappa(sc.TANGENTIAL, 20.0) == pytest.approx(1.01007815641, rel=1e-11)
    assert sc.kappa(sc.TANGENTIAL, 1000.0) == pytest.approx(1, abs=1e-4)
    assert sc.kappa(sc.TANGENTIAL, 0.05) == pytest.approx(0.05**2 / 150, rel=2e-2)
    assert sc.kappa(sc.NORMAL, 0.2) == pytest.approx(0.2**2 / 150 + 0.2**4 / 1200, rel=2e-2)
    assert sc.kappa(sc.NORMAL, 0.0) == 0.0


def test_tangential_decorrelation_envelope():
    # K - 1 oscillates inside an envelope of about 40 / alpha^2
    for lo in (40, 160, 640):
        a = np.linspace(lo, 2 * lo, 4001)
        k = np.array([v for _, v in sc.kappa_curves(sc.TANGENTIAL, a)])
        assert np.abs(k - 1).max() * lo**2 < 45


def test_prefactor_invariance(rng):
    for a, b in zip(random_points(rng, 5, 1.0), random_points(rng, 5, 1.0)):
        assert sc.pair_correlation_K2(a, b, scale=0.37) == pytest.approx(sc.pair_correlation_K2(a, b), rel=1e-10)


def test_circle_invariance():
    assert sc.pair_correlation_K2(0.4j, 1.1j) == pytest.approx(sc.kappa(sc.TANGENTIAL, 0.7), abs=1e-10)
    assert sc.pair_correlation_K2(0.3 + 5j, -0.2 + 7j) == pytest.approx(sc.pair_correlation_K2(0.3, -0.2 + 2j), abs=1e-10)


def test_normal_direction_not_stationary():
    assert abs(sc.pair_correlation_K2(0.5, 1.5) - sc.kappa(sc.NORMAL, 1.0)) > 1e-4


def test_swap_symmetry(rng):
    for a, b in zip(random_points(rng, 5, 1.0), random_points(rng, 5, 1.0)):
        assert sc.pair_correlation_K2(a, b) == pytest.approx(sc.pair_correlation_K2(b, a), rel=1e-12)


def test_kappa_curves_vectorized_matches_scalar():
    grid = [0.0, 0.5, 2.0, 7.5]
    for kind in (sc.TANGENTIAL, sc.NORMAL):
        rows = sc.kappa_curves(kind, grid)
        assert [r[0] for r in rows] == grid
        np.testing.assert_allclose([r[1] for r in rows], [sc.kappa(kind, a) for a in grid], rtol=1e-13)
    with pytest.raises(ValueError):
        sc.kappa_curves("diagonal", grid)


def test_disk_kernel_limit_is_G():
    d = dom.disk()
    w = dom.constant_weight(1 / (2 * math.pi))
    assert sc.scaled_kernel_limit(d, 0, 0, w) == pytest.approx(1.0)
    assert sc.scaled_kernel_limit(d, 1 + 1j, 0.5, w) == pytest.approx(sc.eval_G(1.5 + 1j))


def test_disk_kernel_limit_by_direct_sum():
    # with P_k = z^k: (1/N) sum_k (1 + z1/N)^k conj(1 + z2/N)^k -> G(z1 + conj z2)
    z1, z2 = 1 + 1j, 0.5
    N = 4000
    k = np.arange(N + 1)
    direct = np.sum(((1 + z1 / N) * np.conj(1 + z2 / N)) ** k) / N
    assert abs(direct - sc.eval_G(z1 + np.conj(z2))) < 5 / N


@pytest.mark.parametrize("interior", [False, True])
@pytest.mark.parametrize("name", ["disk", "ellipse:0.5"])
def test_kernel_convergence_rate(name, interior):
    d = dom.builtin_domain(name)
    w = dom.constant_weight(1 / (2 * math.pi))
    out = sc.scaled_kernel_convergence(d, w, [20, 40, 80, 160], 1 + 1j, 0.5 + 0j, interior=interior)
    slope = np.polyfit(np.log([n for n, _ in out]), np.log([e for _, e in out]), 1)[0]
    assert slope == pytest.approx(-1, abs=0.15)


def test_kernel_convergence_preconditions(disk, unit_weight):
    with pytest.raises(ValueError):
        sc.scaled_kernel_convergence(disk, unit_weight, [10], 0j, 0j)
    with pytest.raises(ValueError):
        sc.scaled_kernel_convergence(disk, unit_weight, [20], -3 + 0j, 0j)
