import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from spherequad._dims import dim_poly
from spherequad.errors import RankDeficientError
from spherequad.harmonic_model import HarmonicCoefficients
from spherequad.least_squares import (
    approx_error_l2,
    discrete_inner,
    hyperinterpolation,
    ls_fit,
    ls_quadrature,
)
from spherequad.sphere_sampling import PointFamily, jittered_family, product_rule, real_sph_harmonics, synthesize


def poly(rng, N, L=None):
    L = N if L is None else L
    c = np.zeros(dim_poly(2, L))
    c[: dim_poly(2, N)] = rng.standard_normal(dim_poly(2, N))
    return HarmonicCoefficients(L=L, coeffs=c)


def normal_equations_fit(fam, N, samples):
    """Independent oracle: solve the weighted normal equations directly."""
    Y = real_sph_harmonics(N, fam.nodes)
    G = (Y * fam.tau[:, None]).T @ Y
    return np.linalg.solve(G, Y.T @ (fam.tau * samples))


# ls_fit ----------------------------------------------------------------------------


@pytest.mark.parametrize("fam", [product_rule(6), jittered_family(6, 0.1 / 6, seed=7)], ids=["product", "jittered"])
def test_reproduces_polynomials(fam):
    rng = np.random.default_rng(0)
    p = poly(rng, 6)
    vals = synthesize(p, fam.nodes)
    fit = ls_fit(fam, 6, vals)
    assert_allclose(fit.coeffs.coeffs, p.coeffs, atol=1e-10)
    assert fit.residual_discrete <= 1e-18 * np.sum(vals**2)


def test_constant_samples():
    fam = jittered_family(4, 0.05, seed=1)
    fit = ls_fit(fam, 4, np.ones(fam.size))
    assert_allclose(fit.coeffs.coeffs, np.eye(dim_poly(2, 4))[0], atol=1e-12)


def test_matches_normal_equation_oracle():
    rng = np.random.default_rng(1)
    fam = jittered_family(5, 0.05, seed=3)
    f = poly(rng, 12)
    s = synthesize(f, fam.nodes)
    assert_allclose(ls_fit(fam, 5, s).coeffs.coeffs, normal_equations_fit(fam, 5, s), atol=1e-10)


def test_rank_deficient_layer():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((5, 3))
    fam = PointFamily(N=2, nodes=x / np.linalg.norm(x, axis=1)[:, None], tau=np.full(5, 0.2))
    with pytest.raises(RankDeficientError):
        ls_fit(fam, 2, np.ones(5))


def test_conditioning_warning():
    fam = jittered_family(4, 0.05, seed=1)
    with pytest.warns(RuntimeWarning, match="ill-conditioned"):
        ls_fit(fam, 4, np.ones(fam.size), kappa_cap=1.0)


@given(st.integers(0, 2**32 - 1))
def test_best_approximation_property(seed):
    rng = np.random.default_rng(seed)
    N = 4
    fam = jittered_family(N, 0.05, seed=5)
    s = synthesize(poly(rng, 9), fam.nodes)
    fit = ls_fit(fam, N, s)
    q = poly(rng, N)
    r = s - synthesize(q, fam.nodes)
    dist = discrete_inner(fam, r, r)
    assert fit.residual_discrete <= dist * (1 + 1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    fam = jittered_family(4, 0.05, seed=5)
    s1, s2 = rng.standard_normal((2, fam.size))
    lhs = ls_fit(fam, 4, a * s1 + b * s2).coeffs.coeffs
    rhs = a * ls_fit(fam, 4, s1).coeffs.coeffs + b * ls_fit(fam, 4, s2).coeffs.coeffs
    assert_allclose(lhs, rhs, atol=1e-11 * (1 + abs(a) + abs(b)))


def test_stability_bound():
    rng = np.random.default_rng(6)
    fam = jittered_family(6, 0.2 / 6, seed=2)
    A = fam.measured.A
    for _ in range(10):
        s = rng.standard_normal(fam.size)
        fit = ls_fit(fam, 6, s)
        assert fit.coeffs.l2_norm() <= A**-0.5 * np.sqrt(discrete_inner(fam, s, s)) + 1e-9


def test_measure_attaches_constants():
    fam = product_rule(5)
    fit = ls_fit(fam, 5, np.ones(fam.size), measure=True)
    assert fit.mz.kappa == pytest.approx(1.0, abs=1e-10)


# hyperinterpolation ------------------------------------------------------------------------


def test_hyperinterpolation_examples():
    fam = product_rule(4)
    e = np.zeros(dim_poly(2, 4))
    e[4 + 1] = 1.0
    y21 = synthesize(HarmonicCoefficients(L=4, coeffs=e), fam.nodes)
    h = hyperinterpolation(fam, 4, y21)
    assert h.coeffs[5] == pytest.approx(1.0, abs=1e-11)
    assert np.max(np.abs(np.delete(h.coeffs, 5))) <= 1e-11
    assert_allclose(hyperinterpolation(fam, 4, np.zeros(fam.size)).coeffs, 0.0)


def test_hyperinterpolation_equals_ls_fit():
    rng = np.random.default_rng(7)
    for N in (3, 8):
        fam = product_rule(N)
        s = synthesize(poly(rng, 3 * N), fam.nodes)
        assert_allclose(hyperinterpolation(fam, N, s).coeffs, ls_fit(fam, N, s).coeffs.coeffs, atol=1e-10)


def test_hyperinterpolation_warns_off_kappa_one():
    fam = jittered_family(4, 0.05, seed=1)
    with pytest.warns(RuntimeWarning):
        hyperinterpolation(fam, 4, np.ones(fam.size))
    with pytest.warns(RuntimeWarning):
        hyperinterpolation(product_rule(3), 4, np.ones(product_rule(3).size))


# quadrature --------------------------------------------------------------------------------


def test_quadrature_weights_equal_tau_on_product_rule():
    for N in (2, 7, 12):
        fam = product_rule(N)
        assert_allclose(ls_quadrature(fam, N).weights, fam.tau, atol=1e-12)


def test_quadrature_on_jittered_layer():
    fam = jittered_family(8, 0.0125, seed=7)
    q = ls_quadrature(fam, 8)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-10)
    rng = np.random.default_rng(8)
    for _ in range(5):
        p = poly(rng, 8)
        assert q.apply(synthesize(p, fam.nodes)) == pytest.approx(p.coeffs[0], abs=1e-9)


def test_quadrature_equals_integral_of_fit():
    rng = np.random.default_rng(9)
    fam = jittered_family(5, 0.05, seed=4)
    s = rng.standard_normal(fam.size)
    assert ls_quadrature(fam, 5).apply(s) == pytest.approx(ls_fit(fam, 5, s).coeffs.coeffs[0], abs=1e-12)


def test_quadrature_error_dominated_by_l2_error():
    rng = np.random.default_rng(10)
    fam = jittered_family(5, 0.1 / 5, seed=7)
    q = ls_quadrature(fam, 5)
    for _ in range(20):
        f = poly(rng, 14)
        s = synthesize(f, fam.nodes)
        err = abs(f.coeffs[0] - q.apply(s))
        assert err <= approx_error_l2(f, ls_fit(fam, 5, s)) + 1e-9


def test_quadrature_csv_has_weight_column():
    fam = product_rule(2)
    q = ls_quadrature(fam, 2)
    back, extra = PointFamily.from_csv(q.to_csv(fam))
    assert_allclose(extra["w"], q.weights, rtol=0, atol=0)


# approx_error_l2 ---------------------------------------------------------------------------


def test_approx_error_examples():
    rng = np.random.default_rng(11)
    fam = product_rule(5)
    p = poly(rng, 5)
    assert approx_error_l2(p, ls_fit(fam, 5, synthesize(p, fam.nodes))) <= 1e-10
    c = np.zeros(dim_poly(2, 8))
    c[dim_poly(2, 7) + 1] = 1.0
    y = HarmonicCoefficients(L=8, coeffs=c)
    fit = ls_fit(fam, 5, synthesize(y, fam.nodes))
    err = approx_error_l2(y, fit)
    # Pythagoras: mass beyond N plus whatever the fit adds
    assert err == pytest.approx(np.sqrt(1 + fit.coeffs.l2_norm() ** 2), abs=1e-12)
    assert err >= 1 - 1e-12
