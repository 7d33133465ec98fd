import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from mixedheat.errors import DomainCoverageError, DomainError, ResolutionError
from mixedheat.grid import GridSpec
from mixedheat.kernel import (
    build_symbol,
    fractional_factor,
    kernel_convolution_form,
    kernel_from_symbol,
    reflect,
    verify_bounds,
    verify_p1,
    verify_semigroup_property,
)

G1 = GridSpec(1, 4096, 200.0)
WIDE = GridSpec(1, 2**16, 2000.0)

# p_t(0) = (1/pi) int_0^inf exp(-t (x^2 + x^(2 sigma))) dx, 30-digit quadrature
PEAK_ORACLE = {
    (0.25, 0.1): 0.78993611128016727,
    (0.25, 1.0): 0.1474459862230053,
    (0.25, 10.0): 0.0059230650790157042,
    (0.5, 0.1): 0.7528104747636649,
    (0.5, 1.0): 0.17368303944229079,
    (0.5, 10.0): 0.027546301571791843,
    (0.75, 0.1): 0.69655102574496201,
    (0.75, 1.0): 0.18940248903706199,
    (0.75, 10.0): 0.048456472626352126,
}


def _peak_oracle(sigma, t):
    f = lambda x: math.exp(-t * (x * x + x ** (2 * sigma)))  # noqa: E731
    return (quad(f, 0, 1, epsabs=1e-15)[0] + quad(f, 1, np.inf, epsabs=1e-15)[0]) / math.pi


def test_peak_oracle_is_reproducible():
    for (sigma, t), v in PEAK_ORACLE.items():
        assert math.isclose(_peak_oracle(sigma, t), v, rel_tol=1e-9)


def test_symbol_examples():
    s = build_symbol(G1, 0.5)
    assert s.at(0) == 0.0
    g = GridSpec(1, 16, math.pi)  # xi_k = k
    assert build_symbol(g, 0.5).at(1) == 2.0
    g2 = GridSpec(2, 16, math.pi)
    assert math.isclose(build_symbol(g2, 0.75).at((3, 4)), 25 + 25**0.75, rel_tol=1e-15)
    assert math.isclose(25 + 25**0.75, 36.18033988749895, rel_tol=1e-15)


def test_symbol_invariants():
    s = build_symbol(GridSpec(2, 32, 5.0), 0.3)
    v = s.values
    assert v[0, 0] == 0.0
    assert np.all(v.flat[1:] > 0)
    np.testing.assert_array_equal(v, np.fft.ifftshift(reflect(np.fft.fftshift(v))))
    with pytest.raises(DomainError):
        build_symbol(G1, 1.0)


def test_symbol_radially_nondecreasing():
    g = GridSpec(1, 256, 10.0)
    s = build_symbol(g, 0.4).values
    pos = s[: g.n // 2]
    assert np.all(np.diff(pos) > 0)


@pytest.mark.parametrize("sigma,t", sorted(PEAK_ORACLE))
def test_peak_against_fourier_oracle_with_image_correction(sigma, t):
    k = kernel_from_symbol(WIDE, sigma, t, wrap_tol=None)
    peak = k.values.values[WIDE.n // 2]
    # periodic images of the algebraic tail ~ t |x|^(-1-2 sigma) shift the value at 0 by O(t L^(-1-2 sigma))
    images = 2 * t * (2 * WIDE.half_width) ** (-1 - 2 * sigma) * 2.0
    assert abs(peak - PEAK_ORACLE[(sigma, t)]) <= max(images, 1e-12) * 5


def test_peak_matches_gaussian_poisson_convolution():
    # independent oracle: (G_1 * P_1)(0) by direct quadrature of the two closed-form factors
    g = lambda y: (4 * math.pi) ** -0.5 * math.exp(-y * y / 4) / (math.pi * (1 + y * y))  # noqa: E731
    oracle = 2 * quad(g, 0, np.inf, epsabs=1e-15, epsrel=1e-13)[0]
    assert math.isclose(oracle, 0.17368303944229083, rel_tol=1e-12)
    k = kernel_from_symbol(WIDE, 0.5, 1.0, wrap_tol=None)
    assert abs(k.values.values[WIDE.n // 2] - oracle) < 1e-5


def test_poisson_anchor():
    H = fractional_factor(WIDE, 0.5, 1.0)
    x = WIDE.axis
    poisson = 1.0 / (math.pi * (1.0 + x**2))
    assert np.max(np.abs(H.values - poisson)) < 1e-6


@pytest.mark.parametrize("d,n,L,sigma,t,tol", [(1, 4096, 200.0, 0.5, 1.0, 1e-8), (1, 4096, 200.0, 0.25, 2.0, 1e-8), (2, 256, 64.0, 0.5, 1.0, 1e-7)])
def test_convolution_form_matches_symbol(d, n, L, sigma, t, tol):
    g = GridSpec(d, n, L)
    a = kernel_from_symbol(g, sigma, t, wrap_tol=None)
    b = kernel_convolution_form(g, sigma, t, wrap_tol=None)
    assert np.max(np.abs(a.values.values - b.values.values)) <= tol
    assert abs(g.cell_volume * b.values.values.sum() - 1.0) <= 1e-6


@pytest.mark.parametrize("sigma,t", [(0.5, 1.0), (0.9, 0.1), (0.25, 2.0)])
def test_p1_passes(sigma, t):
    rep = verify_p1(kernel_from_symbol(G1, sigma, t, wrap_tol=None))
    assert rep.passed, rep


def test_under_resolved_grid_is_rejected():
    with pytest.raises(ResolutionError, match="anti-aliasing.*suggest n >="):
        kernel_from_symbol(GridSpec(1, 256, 200.0), 0.5, 0.1)


def test_wraparound_is_rejected_on_small_box():
    with pytest.raises(ResolutionError, match="anti-wraparound.*suggest L >="):
        kernel_from_symbol(GridSpec(1, 4096, 20.0), 0.5, 10.0)


@pytest.mark.parametrize("t,s", [(1.0, 1.0), (0.5, 1.5), (2.0, 3.0)])
def test_semigroup_identity(t, s):
    assert verify_semigroup_property(G1, 0.5, t, s, wrap_tol=None) <= 1e-8


def test_semigroup_square_is_symmetric():
    k = kernel_from_symbol(G1, 0.5, 1.0, wrap_tol=None)
    from mixedheat.kernel import periodic_convolution

    sq = periodic_convolution(k.values, k.values)
    assert np.max(np.abs(sq - reflect(sq))) < 1e-15


@given(st.floats(0.05, 0.95), st.floats(0.05, 5.0))
def test_p1_property(sigma, t):
    g = GridSpec(1, 2048, 100.0)
    rep = verify_p1(kernel_from_symbol(g, sigma, t, wrap_tol=None))
    assert rep.passed, rep


def test_peak_strictly_decreasing_in_t():
    peaks = [kernel_from_symbol(G1, 0.5, t, wrap_tol=None).values.sup_norm for t in (0.1, 0.5, 1.0, 5.0, 10.0)]
    assert all(b < a for a, b in zip(peaks, peaks[1:]))


def test_bounds_for_poisson_like_kernel():
    g = GridSpec(1, 2**19, 2.0**17)
    rep = verify_bounds(g, 0.5, [2.0, 10.0, 100.0, 1000.0])
    assert rep.upper_ok and rep.lower_ok
    assert all(c > 0 for c in rep.lower_const_estimates)
    top = rep.upper_const_estimates[1:]
    assert max(top) / min(top) <= 1.2
    # large-t profile approaches the Poisson peak 1/(pi t)
    assert rep.upper_const_estimates[-1] == pytest.approx(1 / math.pi, rel=0.01)


def test_bounds_preconditions():
    with pytest.raises(DomainError):
        verify_bounds(G1, 0.5, [1.0, 10.0])
    with pytest.raises(DomainCoverageError):
        verify_bounds(GridSpec(1, 4096, 20.0), 0.5, [900.0])
