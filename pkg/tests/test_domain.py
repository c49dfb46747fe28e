import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqzero import domain as dom
from eqzero.errors import ConfigError, DegenerateBoundary, MapInversionFailure, WeightNotPositive


def test_boundary_point_examples(disk, ellipse):
    assert dom.boundary_point(disk, 0.0) == 1
    assert abs(dom.boundary_point(ellipse, 0.0) - 1.5) < 1e-15
    assert abs(dom.boundary_point(ellipse, math.pi / 2) - 0.5j) < 1e-15


def test_boundary_speed_examples(disk, ellipse):
    assert dom.boundary_speed(disk, 1.3) == pytest.approx(1.0)
    assert dom.boundary_speed(ellipse, 0.0) == pytest.approx(0.5)
    assert dom.quadrature(disk, 64).length == pytest.approx(2 * math.pi, abs=1e-13)


def test_ellipse_perimeter_against_elliptic_integral(ellipse):
    from scipy.special import ellipe

    a, b = 1.5, 0.5
    exact = 4 * a * ellipe(1 - (b / a) ** 2)
    assert ellipse.length == pytest.approx(exact, rel=1e-13)


def test_collar_widths():
    assert dom.disk().collar == pytest.approx(0.2)
    assert dom.ellipse(0.5).collar == pytest.approx(0.1)
    # the general rule 0.2 (1 - r_crit^2) agrees with 0.2 (1 - m) for ellipses
    assert dom.DomainSpec(c=1.0, tail=(0.3,)).collar == pytest.approx(0.2 * 0.7)


def test_exterior_map_examples(disk, ellipse):
    assert dom.exterior_map(disk, 2.0) == pytest.approx(2.0)
    assert dom.exterior_map(ellipse, 1.5) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", ["disk", "ellipse:0.5", "perturbed:0.1"])
def test_exterior_map_round_trip(name):
    d = dom.builtin_domain(name)
    r, t = np.meshgrid(np.linspace(1.0, 3.0, 9), np.linspace(0, 2 * np.pi, 17, endpoint=False))
    z = d.psi(r * np.exp(1j * t))
    w = dom.exterior_map(d, z)
    np.testing.assert_allclose(d.psi(w), z, atol=1e-10)
    np.testing.assert_allclose(np.abs(w), r, atol=1e-10)


def test_exterior_map_within_collar(ellipse):
    w0 = 0.95 * np.exp(0.4j)
    assert dom.exterior_map(ellipse, ellipse.psi(w0)) == pytest.approx(w0, abs=1e-12)


def test_exterior_map_rejects_deep_interior(disk):
    with pytest.raises(MapInversionFailure):
        dom.exterior_map(disk, 0.1)
    w, ok = dom.exterior_map_partial(disk, np.array([0.1, 2.0]))
    assert list(ok) == [False, True]


def test_exterior_map_derivative_matches_difference(ellipse):
    z, h = 2.0 + 0.3j, 1e-6
    fd = (dom.exterior_map(ellipse, z + h) - dom.exterior_map(ellipse, z - h)) / (2 * h)
    assert abs(dom.exterior_map_derivative(ellipse, z) - fd) < 1e-8


def test_equilibrium_pairing(disk, ellipse):
    assert dom.equilibrium_pairing(disk, lambda z: np.ones_like(z)) == pytest.approx(1.0)
    assert abs(dom.equilibrium_pairing(disk, lambda z: z.real)) < 1e-15
    for k in range(1, 11):
        # circle average of |z|^2k = 1 and of z^k = 0
        phi = lambda z, k=k: np.abs(z) ** (2 * k) + z.real**k
        circle = np.mean(phi(np.exp(2j * np.pi * np.arange(4096) / 4096)))
        assert dom.equilibrium_pairing(disk, phi) == pytest.approx(circle, abs=1e-10)
    # |Psi(e^{it})|^2 = 1 + m^2 + 2 m cos 2t averages to 1 + m^2
    assert dom.equilibrium_pairing(ellipse, lambda z: np.abs(z) ** 2) == pytest.approx(1.25, abs=1e-14)
    with pytest.raises(ValueError):
        dom.equilibrium_pairing(disk, np.abs, M=8)


def test_outer_function_constant_weights(disk):
    D1 = dom.outer_function(disk, dom.constant_weight(1.0))
    assert np.all(D1.log_coeffs == 0)
    D4 = dom.outer_function(disk, dom.constant_weight(4.0))
    assert D4.value(3.0 + 1j) == pytest.approx(2.0)


@pytest.mark.parametrize("amp", [0.5, 1.0, 2.0])
def test_outer_function_reproduces_modulus(disk, amp):
    weight = dom.exp_cos_weight(amp)
    D = dom.outer_function(disk, weight)
    theta = np.linspace(0, 2 * np.pi, 301)
    np.testing.assert_allclose(np.abs(D.value(np.exp(1j * theta))) ** 2, weight(theta), rtol=1e-8)
    # for rho = exp(a cos t), D(w) = exp(a/2 / w) exactly
    assert D.value(2.0) == pytest.approx(math.exp(amp / 4), rel=1e-13)


def test_outer_function_rejects_nonpositive(disk):
    bad = dom.WeightSpec(lambda t: np.cos(t))
    with pytest.raises(WeightNotPositive):
        dom.outer_function(disk, bad)
    with pytest.raises(WeightNotPositive):
        dom.constant_weight(0.0)


def test_psi_factor_disk(disk):
    D = dom.outer_function(disk, dom.constant_weight(1 / (2 * math.pi)))
    assert dom.psi_factor(disk, D, 1.7 - 0.4j) == pytest.approx(1.0)


def test_psi_factor_ellipse_is_finite_and_positive_at_infinity(ellipse):
    D = dom.outer_function(ellipse, dom.constant_weight(1.0))
    # at large z, Phi' -> 1/c and the factor tends to (2 pi)^-1/2
    assert dom.psi_factor(ellipse, D, 1e6) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-6)
    assert np.isfinite(dom.psi_factor(ellipse, D, 2.0))


def test_psi_branch_is_continuous_along_boundary():
    d = dom.perturbed_disk(0.1)
    D = dom.outer_function(d, dom.exp_cos_weight(0.7))
    theta = 2 * np.pi * np.arange(720) / 720
    vals = dom.psi_factor(d, D, d.psi(np.exp(1j * theta)))
    jumps = np.abs(np.diff(np.r_[vals, vals[0]]))
    assert jumps.max() < 10 * np.median(jumps)


def test_sqrt_exterior_derivative_squares_back(ellipse):
    z = np.array([2.0, -1.0 + 1.5j, 0.3 - 2j])
    s = dom.sqrt_exterior_derivative(ellipse, z)
    np.testing.assert_allclose(s**2, dom.exterior_map_derivative(ellipse, z), rtol=1e-12)


def test_non_univalent_data_rejected():
    with pytest.raises(DegenerateBoundary):
        dom.DomainSpec(c=1.0, tail=(2.0,))
    with pytest.raises(DegenerateBoundary):
        dom.DomainSpec(c=-1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(-2, 2), st.floats(0, 2 * np.pi))
def test_round_trip_property(m, logr, t):
    d = dom.ellipse(m)
    w = math.exp(abs(logr)) * complex(math.cos(t), math.sin(t))
    assert abs(dom.exterior_map(d, d.psi(w)) - w) < 1e-10 * abs(w)


def test_domain_file_round_trip(tmp_path):
    f = tmp_path / "e.yaml"
    f.write_text("c: 2.0\nc0: [0.5, -1]\ntail: [[1.0, 0.0]]\nweight: exp_cos:0.5\nlabel: big\n")
    d, w = dom.load_domain_file(f)
    assert d.c == 2.0 and d.c0 == 0.5 - 1j and d.tail == (1 + 0j,)
    assert d.label == "big"
    assert w(0.0) == pytest.approx(math.exp(0.5))


@pytest.mark.parametrize(
    "text, key",
    [
        ("c: 1\nradius: 2\n", "radius"),
        ("c: -1\n", "c"),
        ("c0: [1, 2, 3]\n", "c0"),
        ("tail: 0.5\n", "tail"),
        ("weight: gaussian:1\n", "weight"),
        ("tail: [[3.0, 0.0]]\n", "tail"),
    ],
)
def test_domain_file_errors_name_the_key(tmp_path, text, key):
    f = tmp_path / "bad.yaml"
    f.write_text(text)
    with pytest.raises(ConfigError, match=key):
        dom.load_domain_file(f)


def test_builtin_names():
    assert dom.builtin_domain("ellipse:0.3").tail == (0.3 + 0j,)
    assert dom.builtin_domain("perturbed").tail == (0j, 0.1 + 0j)
    with pytest.raises(ConfigError):
        dom.builtin_domain("square")
    with pytest.raises(ConfigError):
        dom.builtin_domain("ellipse:1.5")
