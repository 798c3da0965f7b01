import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decomplab.analytic import pk_transform
from decomplab.errors import InversionUnstableError, NodesBelowDomainError
from decomplab.inversion import InversionConfig, invert_cdf, invert_cdf_grid, stehfest_weights, stieltjes_convolution


@pytest.mark.parametrize("M", [8, 12, 16, 18, 20])
def test_weights_sum_to_zero(M):
    w = stehfest_weights(M)
    assert w.size == M
    # exact identities, checked up to the cancellation error of the alternating sums
    k = np.arange(1, M + 1)
    assert abs(w.sum()) <= 64 * np.finfo(float).eps * np.abs(w).sum()
    # the constant transform 1/s (CDF identically one) is reproduced
    assert abs((w / k).sum() - 1.0) <= 64 * np.finfo(float).eps * np.abs(w / k).sum()


def test_config_checks():
    with pytest.raises(ValueError):
        InversionConfig(terms=15)
    with pytest.raises(ValueError):
        InversionConfig(terms=22)


def test_point_mass_at_zero():
    res = invert_cdf_grid(lambda s: np.ones_like(s), [0.1, 1.0, 10.0])
    np.testing.assert_allclose(res.cdf, 1.0, atol=1e-9)
    assert res.atom == 1.0


def test_unit_exponential():
    u = np.linspace(0.1, 1.0, 19)
    res = invert_cdf_grid(lambda s: 1.0 / (1.0 + s), u)
    assert np.max(np.abs(res.cdf - (1.0 - np.exp(-u)))) < 1e-6
    u = np.linspace(0.1, 10.0, 50)
    assert np.max(np.abs(invert_cdf_grid(lambda s: 1.0 / (1.0 + s), u).cdf - (1.0 - np.exp(-u)))) < 1e-4


def test_ruin_closed_form(spec_a1):
    u = np.linspace(0.1, 10.0, 100)
    t0 = time.perf_counter()
    res = invert_cdf_grid(lambda s: pk_transform(spec_a1, s), u)
    assert time.perf_counter() - t0 < 5.0
    assert np.max(np.abs(res.cdf - (1.0 - 0.5 * np.exp(-0.5 * u)))) <= 1e-4
    assert res.atom == pytest.approx(0.5, abs=1e-5)


def test_scalar_and_grid_agree(spec_a1):
    f = lambda s: pk_transform(spec_a1, s)
    assert invert_cdf(f, 2.0) == pytest.approx(float(invert_cdf_grid(f, [0.5, 2.0]).cdf[1]), abs=1e-12)


def test_grid_order_is_preserved(spec_a1):
    f = lambda s: pk_transform(spec_a1, s)
    u = np.array([3.0, 0.5, 1.0])
    res = invert_cdf_grid(f, u)
    np.testing.assert_array_equal(res.u, u)
    assert res.cdf[1] < res.cdf[2] < res.cdf[0]


def test_nodes_below_abscissa():
    with pytest.raises(NodesBelowDomainError):
        invert_cdf_grid(lambda s: 1.0 / (1.0 + s), [1.0, 5.0], InversionConfig(abscissa=0.5))


def test_unstable_transform_detected():
    # a jump at u = 1 cannot be resolved by real-node inversion
    step = lambda s: np.exp(-s)
    with pytest.raises(InversionUnstableError):
        invert_cdf_grid(step, [1.0])


def test_rejects_nonpositive_u():
    with pytest.raises(ValueError):
        invert_cdf_grid(lambda s: 1.0 / (1.0 + s), [0.0, 1.0])


def test_convolution_of_exponentials():
    # Exp(1) + Exp(2) has CDF 1 - 2 e^{-u} + e^{-2u}
    cdf1 = lambda x: 1.0 - np.exp(-np.asarray(x))
    cdf2 = lambda x: 1.0 - np.exp(-2.0 * np.asarray(x))
    u = np.array([0.5, 1.0, 3.0])
    got = stieltjes_convolution(cdf1, 0.0, cdf2, u, step=1e-3)
    np.testing.assert_allclose(got, 1 - 2 * np.exp(-u) + np.exp(-2 * u), atol=1e-6)


def test_convolution_with_atom():
    # a = atom 0.5 at zero plus 0.5 Exp(1); b = point mass at 0
    cdf_a = lambda x: 1.0 - 0.5 * np.exp(-np.asarray(x))
    cdf_b = lambda x: np.ones_like(np.asarray(x, dtype=float))
    u = np.array([0.2, 2.0])
    np.testing.assert_allclose(stieltjes_convolution(cdf_a, 0.5, cdf_b, u), cdf_a(u), atol=1e-12)


@given(rate=st.floats(0.2, 5.0), u=st.floats(0.1, 1.5))
@settings(max_examples=40, deadline=None)
def test_exponential_family(rate, u):
    got = invert_cdf(lambda s: rate / (rate + s), u / rate)
    assert got == pytest.approx(1.0 - math.exp(-u), abs=1e-5)
