"""Normalized Gegenbauer polynomials and their linearization coefficients.

Everything here is relative to the weight

    w0(t) = c0 (1 - t^2)^((d-2)/2),   c0 chosen so that  <1> = 1,

on [-1, 1], which is the push-forward of the normalized surface measure of
S^d under x -> x . y. ``G_l`` denotes the Gegenbauer polynomial of index
(d-1)/2 scaled so that G_l(1) = 1.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ._dims import dim_harmonic, dim_harmonic_array
from .errors import DomainError, ResourceLimitError

#: Largest degree cutoff accepted by :func:`triple_product_table`.
TABLE_CAP = 160

#: Default absolute tolerance for checks on the coefficient table.
TABLE_TOL = 1e-10

_T_FUZZ = 1e-12


def _check_d(d):
    if int(d) != d or d < 2:
        raise DomainError(f"sphere dimension must be an integer >= 2, got {d}")


def _as_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1 + _T_FUZZ):
        raise DomainError("Gegenbauer argument outside [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def gegenbauer_all(d, L, t):
    """Return G_0, ..., G_L at ``t`` stacked along a new leading axis.

    Uses the three-term recurrence in its normalized form

        G_{l+1} = ((2l + 2a) t G_l - l G_{l-1}) / (l + 2a),   a = (d-1)/2,

    which is forward-stable on [-1, 1].
    """
    _check_d(d)
    if L < 0:
        raise DomainError("degree must be >= 0")
    t = _as_t(t)
    a = 0.5 * (d - 1)
    out = np.empty((L + 1,) + t.shape)
    out[0] = 1.0
    if L >= 1:
        out[1] = t
    for ell in range(1, L):
        out[ell + 1] = ((2 * ell + 2 * a) * t * out[ell] - ell * out[ell - 1]) / (ell + 2 * a)
    return out


def gegenbauer_series(d, coeffs, t):
    """Evaluate sum_l coeffs[l] G_l(t) without storing every G_l."""
    _check_d(d)
    t = _as_t(t)
    coeffs = np.asarray(coeffs, dtype=float)
    a = 0.5 * (d - 1)
    total = np.zeros_like(t)
    if coeffs.size == 0:
        return total
    g_prev = np.ones_like(t)
    total += coeffs[0] * g_prev
    if coeffs.size == 1:
        return total
    g = t.copy()
    total += coeffs[1] * g
    for ell in range(1, coeffs.size - 1):
        g_prev, g = g, ((2 * ell + 2 * a) * t * g - ell * g_prev) / (ell + 2 * a)
        c = coeffs[ell + 1]
        if c != 0.0:
            total += c * g
    return total


def gegenbauer_eval(d, ell, t):
    """G_ell(t) for the sphere S^d; |G_ell(t)| <= 1 on [-1, 1]."""
    if ell < 0:
        raise DomainError("degree must be >= 0")
    g = gegenbauer_all(d, ell, t)[ell]
    return g.item() if g.ndim == 0 else g


@dataclass(frozen=True)
class GaussRule1D:
    """Gauss rule for the normalized weight w0 of S^d.

    Exact for polynomials of degree <= 2n - 1; weights sum to 1.
    """

    nodes: np.ndarray
    weights: np.ndarray
    d: int
    n: int

    def integrate(self, values):
        """Apply the rule to function values sampled at ``nodes`` (last axis)."""
        return np.asarray(values) @ self.weights


def gauss_rule(d, n):
    """Golub-Welsch construction on the Jacobi((d-2)/2, (d-2)/2) recurrence."""
    _check_d(d)
    if n < 1:
        raise DomainError("node count must be >= 1")
    a = 0.5 * (d - 1)
    k = np.arange(1, n, dtype=float)
    # monic recurrence p_{k+1} = t p_k - b_k p_{k-1}
    b = k * (k + 2 * a - 1) / (4 * (k + a) * (k + a - 1))
    x, v = eigh_tridiagonal(np.zeros(n), np.sqrt(b))
    w = v[0] ** 2
    # enforce the exact symmetry of the weight
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return GaussRule1D(nodes=x, weights=w, d=int(d), n=int(n))


def norm_sq(d, ell):
    """h_ell^2 = <G_ell^2> = 1 / N(d, ell). Accepts scalars or arrays."""
    _check_d(d)
    if np.ndim(ell) == 0:
        if ell < 0:
            raise DomainError("degree must be >= 0")
        return 1.0 / dim_harmonic(d, int(ell))
    return 1.0 / dim_harmonic_array(d, ell)


@dataclass(frozen=True)
class TripleProductTable:
    """Dense table C[l, s, k] = <G_l G_s G_k> / h_k^2 for l, s <= L, k <= 2L."""

    d: int
    L: int
    entries: np.ndarray
    norms: np.ndarray
    raw: np.ndarray = field(repr=False)

    def check(self, tol=TABLE_TOL):
        """Return a dict of the worst violation of each linearization property.

        Keys ``symmetry``, ``nonneg``, ``support``, ``sum`` and ``parseval``;
        each value is a nonnegative defect, to be compared with ``tol``.
        """
        C = self.entries
        L = self.L
        ell = np.arange(L + 1)[:, None, None]
        s = np.arange(L + 1)[None, :, None]
        k = np.arange(2 * L + 1)[None, None, :]
        inside = (k >= np.abs(ell - s)) & (k <= ell + s)
        rule = gauss_rule(self.d, 2 * L + 1)
        G = gegenbauer_all(self.d, L, rule.nodes)
        g2 = G**2
        # <G_l^2 G_s^2>
        quartic = (g2 * rule.weights) @ g2.T
        parseval = np.einsum("lsk,k->ls", self.raw**2, 1.0 / self.norms)
        return {
            "symmetry": float(np.max(np.abs(C - C.transpose(1, 0, 2)))),
            "nonneg": float(max(0.0, -np.min(np.where(inside, C, 0.0)))),
            "support": float(np.max(np.abs(np.where(inside, 0.0, C)))),
            "sum": float(np.max(np.abs(C.sum(axis=2) - 1.0))),
            "parseval": float(np.max(np.abs(parseval - quartic))),
        }


def triple_product_table(d, L, cap=TABLE_CAP):
    """Linearization coefficients of G_l G_s in the G_k basis.

    The integrand G_l G_s G_k has degree <= 4L, so a (2L+1)-node rule is
    exact for every entry.
    """
    _check_d(d)
    if L < 0:
        raise DomainError("cutoff must be >= 0")
    if L > cap:
        raise ResourceLimitError(f"table cutoff {L} exceeds cap {cap}")
    rule = gauss_rule(d, 2 * L + 1)
    G = gegenbauer_all(d, 2 * L, rule.nodes)
    low = G[: L + 1]
    pairs = (low[:, None, :] * low[None, :, :] * rule.weights).reshape(-1, rule.n)
    raw = (pairs @ G.T).reshape(L + 1, L + 1, 2 * L + 1)
    norms = norm_sq(d, np.arange(2 * L + 1))
    entries = raw / norms
    for arr in (entries, raw, norms):
        arr.setflags(write=False)
    return TripleProductTable(d=int(d), L=int(L), entries=entries, norms=norms, raw=raw)


def convolve(mu, nu, table):
    """Formal convolution (mu * nu)_k = sum_{l,s} C_k^{l,s} mu_l nu_s, k <= 2L.

    The kernel of the result is the pointwise product of the two kernels.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(mu < 0) or np.any(nu < 0):
        raise DomainError("convolution is defined here for nonnegative sequences")
    mu = _fit_support(mu, table.L)
    nu = _fit_support(nu, table.L)
    return np.einsum("lsk,l,s->k", table.entries, mu, nu)


def _fit_support(seq, L):
    nz = np.flatnonzero(seq)
    if nz.size and nz[-1] > L:
        raise DomainError(f"sequence support {nz[-1]} exceeds table cutoff {L}")
    out = np.zeros(L + 1)
    m = min(seq.size, L + 1)
    out[:m] = seq[:m]
    return out
