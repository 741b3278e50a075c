import math

import numpy as np
import pytest
from scipy import integrate

from app.core import statkit
from app.core.errors import InsufficientSamplesError


def _normal_pdf(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _chi2_pdf(k):
    norm = 2.0 ** (0.5 * k) * math.gamma(0.5 * k)
    return lambda x: x ** (0.5 * k - 1.0) * math.exp(-0.5 * x) / norm


def _f_pdf(d1, d2):
    beta = math.gamma(0.5 * d1) * math.gamma(0.5 * d2) / math.gamma(0.5 * (d1 + d2))

    def pdf(x):
        if x <= 0.0:
            return 0.0
        return math.sqrt((d1 * x) ** d1 * d2**d2 / (d1 * x + d2) ** (d1 + d2)) / (x * beta)

    return pdf


def test_normal_quantile_matches_known_value():
    assert statkit.normal_inv_cdf(0.95) == pytest.approx(1.6448536269514722, abs=1e-10)
    assert statkit.normal_inv_cdf(0.5) == 0.0


def test_normal_quantile_is_antisymmetric():
    for p in (0.01, 0.2, 0.4):
        assert statkit.normal_inv_cdf(p) == pytest.approx(-statkit.normal_inv_cdf(1.0 - p), abs=1e-10)


@pytest.mark.parametrize("p", [0.001, 0.05, 0.3, 0.5, 0.8, 0.975, 0.9999])
def test_normal_quantile_round_trips_through_quadrature(p):
    q = statkit.normal_inv_cdf(p)
    left, _ = integrate.quad(_normal_pdf, -np.inf, q, epsabs=1e-13, epsrel=1e-13)
    assert abs(left - p) <= 1e-8


@pytest.mark.parametrize("k", [2, 5, 30])
@pytest.mark.parametrize("p", [0.0005, 0.1, 0.5, 0.9, 0.9995])
def test_chi2_quantile_round_trips_through_quadrature(k, p):
    q = statkit.chi2_quantile(k, p)
    mass, _ = integrate.quad(_chi2_pdf(k), 0.0, q, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(mass - p) <= 1e-8


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9, 0.999])
def test_chi2_quantile_with_two_dof_has_closed_form(p):
    assert statkit.chi2_quantile(2, p) == pytest.approx(-2.0 * math.log(1.0 - p), rel=1e-12)


@pytest.mark.parametrize("d1,d2", [(2, 7), (3, 20), (4, 4)])
@pytest.mark.parametrize("p", [0.05, 0.5, 0.99])
def test_f_quantile_round_trips_through_quadrature(d1, d2, p):
    q = statkit.f_quantile(d1, d2, p)
    mass, _ = integrate.quad(_f_pdf(d1, d2), 0.0, q, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(mass - p) <= 1e-8


def test_f_median_with_equal_dof_is_one():
    for d in (1, 3, 50):
        assert statkit.f_quantile(d, d, 0.5) == 1.0


def test_f_quantile_reciprocal_identity():
    assert statkit.f_quantile(3, 7, 0.9) * statkit.f_quantile(7, 3, 0.1) == pytest.approx(1.0, abs=1e-10)


def test_hotelling_quantile_in_one_dimension_is_the_f_quantile():
    assert statkit.hotelling_t2_quantile(1, 30, 0.99) == pytest.approx(statkit.f_quantile(1, 30, 0.99), rel=1e-12)


def test_hotelling_quantile_uses_the_f_transform():
    n, m, p = 3, 499, 0.999
    expected = n * m / (m - n + 1) * statkit.f_quantile(n, m - n + 1, p)
    assert statkit.hotelling_t2_quantile(n, m, p) == pytest.approx(expected, rel=1e-14)


def test_hotelling_quantile_rejects_too_few_samples():
    with pytest.raises(InsufficientSamplesError, match="insufficient samples"):
        statkit.hotelling_t2_quantile(3, 2, 0.9)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_quantiles_reject_probabilities_outside_unit_interval(p):
    with pytest.raises(ValueError, match="Probability"):
        statkit.normal_inv_cdf(p)


def test_chi2_quantile_rejects_nonpositive_dof():
    with pytest.raises(ValueError, match="positive integer"):
        statkit.chi2_quantile(0, 0.5)


def test_reference_quantile_values():
    assert statkit.normal_inv_cdf(0.99875) == pytest.approx(3.0233, abs=1e-4)
    assert statkit.f_quantile(2, 10, 0.95) == pytest.approx(4.1028, abs=1e-4)


PROBABILITY_GRID = [1e-4, 0.001, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999, 0.9999]


@pytest.mark.parametrize(
    "quantile",
    [
        statkit.normal_inv_cdf,
        lambda p: statkit.chi2_quantile(1, p),
        lambda p: statkit.chi2_quantile(9, p),
        lambda p: statkit.f_quantile(2, 10, p),
        lambda p: statkit.f_quantile(5, 3, p),
        lambda p: statkit.hotelling_t2_quantile(3, 99, p),
    ],
    ids=["normal", "chi2-1", "chi2-9", "f-2-10", "f-5-3", "hotelling-3-99"],
)
def test_quantiles_increase_strictly_in_p(quantile):
    values = [quantile(p) for p in PROBABILITY_GRID]

    assert all(later > earlier for earlier, later in zip(values, values[1:]))


@pytest.mark.parametrize("n", [1, 2, 4])
@pytest.mark.parametrize("p", [0.9, 0.999])
def test_hotelling_quantile_approaches_chi2_for_many_samples(n, p):
    t2 = statkit.hotelling_t2_quantile(n, 1_000_000, p)
    chi2 = statkit.chi2_quantile(n, p)

    assert abs(t2 - chi2) / chi2 < 0.01
