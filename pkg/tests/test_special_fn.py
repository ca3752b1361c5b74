import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.special import beta, eval_gegenbauer, eval_legendre, gamma

from spherequad._dims import dim_harmonic
from spherequad.errors import DomainError, ResourceLimitError
from spherequad.special_fn import (
    convolve,
    gauss_rule,
    gegenbauer_all,
    gegenbauer_eval,
    gegenbauer_series,
    norm_sq,
    triple_product_table,
)


def w0(d):
    """Normalized weight (1 - t^2)^((d-2)/2) as an independent closure."""
    c0 = gamma((d + 1) / 2) / (np.sqrt(np.pi) * gamma(d / 2))
    return lambda t: c0 * (1 - t * t) ** ((d - 2) / 2)


def scipy_gegenbauer(d, ell, t):
    if d == 2:
        return eval_legendre(ell, t)
    a = (d - 1) / 2
    return eval_gegenbauer(ell, a, t) / eval_gegenbauer(ell, a, 1.0)


# gegenbauer_eval --------------------------------------------------------------


def test_gegenbauer_examples():
    assert gegenbauer_eval(3, 7, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert gegenbauer_eval(4, 1, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert gegenbauer_eval(2, 2, 0.0) == pytest.approx(-0.5, abs=1e-15)


def test_gegenbauer_matches_scipy():
    t = np.linspace(-1, 1, 41)
    for d in (2, 3, 4, 5):
        G = gegenbauer_all(d, 30, t)
        for ell in range(31):
            assert_allclose(G[ell], scipy_gegenbauer(d, ell, t), atol=1e-12)


@given(st.integers(2, 6), st.integers(0, 60), st.floats(-1, 1))
def test_gegenbauer_bounded_by_one(d, ell, t):
    assert abs(gegenbauer_eval(d, ell, t)) <= 1 + 1e-12


def test_gegenbauer_domain_errors():
    with pytest.raises(DomainError):
        gegenbauer_eval(2, 3, 1.5)
    with pytest.raises(DomainError):
        gegenbauer_eval(1, 3, 0.5)
    with pytest.raises(DomainError):
        gegenbauer_eval(2, -1, 0.5)


def test_gegenbauer_series_matches_stack():
    rng = np.random.default_rng(0)
    c = rng.random(25)
    t = np.linspace(-1, 1, 13)
    assert_allclose(gegenbauer_series(3, c, t), c @ gegenbauer_all(3, 24, t), atol=1e-13)
    assert_allclose(gegenbauer_series(3, [], t), 0.0)


# gauss_rule --------------------------------------------------------------------


def test_gauss_examples():
    assert gauss_rule(2, 2).integrate(gauss_rule(2, 2).nodes ** 2) == pytest.approx(1 / 3, abs=1e-15)
    r = gauss_rule(3, 4)
    assert r.integrate(r.nodes**2) == pytest.approx(0.25, abs=1e-15)
    for d in (2, 3, 7):
        r1 = gauss_rule(d, 1)
        assert_allclose(r1.nodes, [0.0], atol=1e-16)
        assert_allclose(r1.weights, [1.0])


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_gauss_exactness_against_beta_moments(d):
    n = 6
    r = gauss_rule(d, n)
    assert np.all(np.diff(r.nodes) > 0)
    assert np.all(r.weights > 0)
    assert r.weights.sum() == pytest.approx(1.0, abs=1e-14)
    for k in range(2 * n):
        # moments of the normalized weight: B((k+1)/2, d/2) / B(1/2, d/2), zero for odd k
        exact = 0.0 if k % 2 else beta((k + 1) / 2, d / 2) / beta(0.5, d / 2)
        assert r.integrate(r.nodes**k) == pytest.approx(exact, abs=1e-14)


# norm_sq -------------------------------------------------------------------------


def test_norm_sq_examples():
    assert norm_sq(2, 0) == 1.0
    assert norm_sq(2, 1) == pytest.approx(1 / 3)
    assert norm_sq(3, 1) == pytest.approx(1 / 4)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_norm_sq_quadrature_oracle(d):
    r = gauss_rule(d, 60)
    G = gegenbauer_all(d, 50, r.nodes)
    gram = (G * r.weights) @ G.T
    h = norm_sq(d, np.arange(51))
    assert_allclose(gram, np.diag(h), atol=1e-11)
    assert np.all(np.diff(h) < 0)


def test_norm_sq_printed_denominator_is_wrong():
    # the variant with (2l + d + 1) in the denominator gives 1/(2l+3) at d=2
    r = gauss_rule(2, 10)
    G = gegenbauer_all(2, 3, r.nodes)
    q = r.integrate(G[3] ** 2)
    assert q == pytest.approx(1 / 7)
    assert abs(q - 1 / 9) > 1e-3


# triple products --------------------------------------------------------------------


def test_table_examples():
    T = triple_product_table(2, 4)
    assert_allclose(T.entries[1, 1, :3], [1 / 3, 0, 2 / 3], atol=1e-12)
    for s in range(5):
        e = np.zeros(9)
        e[s] = 1
        assert_allclose(T.entries[0, s], e, atol=1e-12)
    T3 = triple_product_table(3, 5)
    assert T3.entries[5, 5].sum() == pytest.approx(1.0, abs=1e-10)


def test_table_matches_adaptive_quadrature():
    d = 3
    T = triple_product_table(d, 4)
    w = w0(d)
    for ell, s, k in [(1, 2, 3), (2, 2, 0), (3, 4, 5), (4, 4, 8), (2, 3, 2)]:
        f = lambda t: scipy_gegenbauer(d, ell, t) * scipy_gegenbauer(d, s, t) * scipy_gegenbauer(d, k, t) * w(t)
        val = quad(f, -1, 1, epsabs=1e-13)[0] * dim_harmonic(d, k)
        assert T.entries[ell, s, k] == pytest.approx(val, abs=1e-10)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_table_properties(d):
    defects = triple_product_table(d, 20).check()
    assert max(defects.values()) < 1e-10, defects


def test_table_cap():
    with pytest.raises(ResourceLimitError):
        triple_product_table(2, 200)


# convolution ------------------------------------------------------------------------


def test_convolve_examples():
    T = triple_product_table(2, 3)
    d0 = np.array([1.0])
    assert_allclose(convolve(d0, d0, T), np.eye(7)[0], atol=1e-12)
    nu = np.array([0.2, 0.0, 0.7, 0.1])
    assert_allclose(convolve(d0, nu, T)[:4], nu, atol=1e-12)
    d1 = np.array([0.0, 1.0])
    assert_allclose(convolve(d1, d1, T)[:4], [1 / 3, 0, 2 / 3, 0], atol=1e-12)


def test_convolve_support_error():
    T = triple_product_table(2, 3)
    with pytest.raises(DomainError):
        convolve(np.eye(6)[5], np.array([1.0]), T)
    with pytest.raises(DomainError):
        convolve(np.array([-1.0]), np.array([1.0]), T)


def test_convolve_is_kernel_product():
    # (mu * nu) has kernel K_mu(t) K_nu(t)
    d = 3
    T = triple_product_table(d, 6)
    rng = np.random.default_rng(1)
    mu, nu = rng.random(7), rng.random(7)
    t = np.linspace(-1, 1, 9)
    lhs = gegenbauer_series(d, convolve(mu, nu, T), t)
    rhs = gegenbauer_series(d, mu, t) * gegenbauer_series(d, nu, t)
    assert_allclose(lhs, rhs, atol=1e-12)


_seq = st.lists(st.floats(0, 10), min_size=1, max_size=21).map(np.array)
_TABLE2 = triple_product_table(2, 20)


@given(_seq, _seq, _seq, st.floats(0, 3), st.floats(0, 3))
def test_convolve_commutative_bilinear(mu, nu, eta, a, b):
    cv = lambda x, y: convolve(x, y, _TABLE2)
    scale = (1 + a + b) * (1 + mu.sum()) * (1 + nu.sum() + eta.sum())
    assert_allclose(cv(mu, nu), cv(nu, mu), atol=1e-12 * scale)
    nu_p = np.zeros(21)
    nu_p[: nu.size] += a * nu
    nu_p[: eta.size] += b * eta
    assert_allclose(cv(mu, nu_p), a * cv(mu, nu) + b * cv(mu, eta), atol=1e-12 * scale)
    total = cv(mu, nu).sum()
    assert total == pytest.approx(mu.sum() * nu.sum(), rel=1e-12, abs=1e-12)
    assert np.all(cv(mu, nu) >= -1e-12 * scale)
