import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoshoot import (
    ConfigurationError,
    DegenerateConfigurationError,
    KernelFamily,
    KernelSpec,
    gram_matrix,
    kernel_derivative,
    kernel_value,
    momenta_from_velocity,
    pairwise_distances,
    circle,
    heart4,
)

# Frozen from 50-digit mpmath evaluations of
# C r^(nu-1) K_(nu-1)(r/alpha), C = 2^(1-nu) / (2 pi alpha^(1+nu) Gamma(nu)),
# normalized by the peak 1 / (4 pi alpha^2 (nu-1)).
BESSEL_ORACLE = [
    # (nu, alpha, r, normalized value, normalized derivative)
    (2.0, 1.0, 1.0, 0.60190723019723457474, -0.42102443824070833334),
    (2.5, 0.8, 0.7, 0.78161628689720329281, -0.45594283402336853324),
]
BESSEL_UNNORM_ORACLE = (2.0, 1.0, 1.0, 0.04789825548432060726)


def test_bessel_value_and_derivative_match_oracle():
    for nu, alpha, r, value, deriv in BESSEL_ORACLE:
        spec = KernelSpec(family="bessel", nu=nu, alpha=alpha)
        assert kernel_value(spec, r) == pytest.approx(value, rel=1e-13)
        assert kernel_derivative(spec, r) == pytest.approx(deriv, rel=1e-13)


def test_bessel_unnormalized_oracle():
    nu, alpha, r, value = BESSEL_UNNORM_ORACLE
    spec = KernelSpec(family="bessel", nu=nu, alpha=alpha, normalized=False)
    assert kernel_value(spec, r) == pytest.approx(value, rel=1e-13)


def test_conical_equals_bessel_at_nu_three_halves():
    """The nu = 3/2 Bessel kernel collapses to the exponential closed form."""
    r = np.linspace(0.05, 12.0, 60)
    for normalized in (True, False):
        for alpha in (0.6, 1.0, 1.7):
            conical = KernelSpec(family="conical", alpha=alpha, normalized=normalized)
            bessel = KernelSpec(
                family="bessel", nu=1.5, alpha=alpha, normalized=normalized
            )
            np.testing.assert_allclose(
                kernel_value(conical, r), kernel_value(bessel, r), rtol=1e-12
            )
            np.testing.assert_allclose(
                kernel_derivative(conical, r),
                kernel_derivative(bessel, r),
                rtol=1e-11,
            )


def test_normalized_kernels_peak_at_one():
    for family, nu in (("conical", 1.5), ("gaussian", 1.5), ("bessel", 2.0)):
        spec = KernelSpec(family=family, nu=nu, alpha=0.9)
        assert kernel_value(spec, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_unnormalized_peaks():
    alpha = 1.3
    conical = KernelSpec(family="conical", alpha=alpha, normalized=False)
    assert kernel_value(conical, 0.0) == pytest.approx(
        1.0 / (2.0 * math.pi * alpha**2), rel=1e-14
    )
    bessel = KernelSpec(family="bessel", nu=2.5, alpha=alpha, normalized=False)
    assert kernel_value(bessel, 0.0) == pytest.approx(
        1.0 / (4.0 * math.pi * alpha**2 * 1.5), rel=1e-14
    )


def test_conical_half_value_point():
    spec = KernelSpec(family="conical", alpha=0.7)
    assert kernel_value(spec, 0.7 * math.log(2.0)) == pytest.approx(0.5, rel=1e-14)


def test_gaussian_value():
    spec = KernelSpec(family="gaussian", alpha=1.0)
    assert kernel_value(spec, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-14)


def _fd_derivative(spec, r):
    # Richardson-extrapolated central difference, O(step^4).
    step = 1e-5 * max(1.0, r)

    def central(h):
        return (kernel_value(spec, r + h) - kernel_value(spec, r - h)) / (2.0 * h)

    return (4.0 * central(step / 2.0) - central(step)) / 3.0


@settings(max_examples=120, deadline=None)
@given(
    family=st.sampled_from(["conical", "gaussian", "bessel"]),
    alpha=st.floats(0.5, 2.0),
    r=st.floats(0.01, 20.0),
)
def test_derivative_matches_finite_differences(family, alpha, r):
    spec = KernelSpec(family=family, nu=2.2, alpha=alpha)
    exact = kernel_derivative(spec, r)
    fd = _fd_derivative(spec, r)
    scale = max(abs(exact), abs(fd))
    if scale < 1e-30:
        return  # both underflowed; relative error is meaningless
    assert abs(exact - fd) / scale <= 1e-8


def test_gram_matrices_are_spd():
    for template in (circle(2.0, n=32), heart4(32)):
        for family in ("conical", "gaussian", "bessel"):
            spec = KernelSpec(family=family, nu=2.0)
            k = gram_matrix(spec, template.points)
            np.testing.assert_allclose(k, k.T, atol=1e-15)
            assert np.linalg.eigvalsh(k).min() > 0


def test_momenta_round_trip():
    spec = KernelSpec()
    pts = circle(2.0, n=24).points
    rng = np.random.default_rng(7)
    u = rng.normal(size=pts.shape)
    p = momenta_from_velocity(spec, pts, u)
    k = gram_matrix(spec, pts)
    np.testing.assert_allclose(k @ p, u, atol=1e-10)


def test_pairwise_distances_basic():
    pts = np.array([[0.0, 0.0], [3.0, 4.0], [0.0, 1.0]])
    d = pairwise_distances(pts)
    assert d[0, 1] == pytest.approx(5.0)
    assert d[1, 0] == pytest.approx(5.0)
    assert d[0, 2] == pytest.approx(1.0)
    np.testing.assert_array_equal(np.diag(d), np.zeros(3))


def test_scalar_and_array_agree():
    spec = KernelSpec(family="bessel", nu=2.0)
    r = np.array([0.3, 1.1, 4.0])
    vals = kernel_value(spec, r)
    for i, ri in enumerate(r):
        scalar = kernel_value(spec, float(ri))
        assert isinstance(scalar, float)
        assert scalar == pytest.approx(vals[i], rel=1e-15)


def test_domain_validation():
    spec = KernelSpec()
    with pytest.raises(ValueError):
        kernel_value(spec, -0.1)
    with pytest.raises(ValueError):
        kernel_derivative(spec, 0.0)
    with pytest.raises(ValueError):
        kernel_derivative(spec, np.array([1.0, -2.0]))


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        KernelSpec(alpha=0.0)
    with pytest.raises(ConfigurationError):
        KernelSpec(alpha=math.inf)
    with pytest.raises(ConfigurationError):
        KernelSpec(family="bessel", nu=1.0)
    with pytest.raises(ValueError):
        KernelSpec(family="triangular")


def test_low_order_bessel_warns_but_evaluates():
    with pytest.warns(UserWarning, match="cusp"):
        spec = KernelSpec(family="bessel", nu=1.2)
    assert 0.0 < kernel_value(spec, 0.5) < 1.0


def test_gram_rejects_coincident_points():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(DegenerateConfigurationError, match="coincide"):
        gram_matrix(KernelSpec(), pts)
    with pytest.raises(ValueError):
        gram_matrix(KernelSpec(), np.zeros((2, 3)))
