"""Worst-case quadrature errors, approximation numbers and lower-bound certificates.

For a space with kernel coefficients lt and a rule Q(f) = sum_j c_j f(x_j),

    e(Q)^2 = lt_0 (1 - sum_j c_j)^2 + sum_{l >= 1} lt_l q_l,
    q_l    = sum_{j,k} c_j c_k G_l(x_j . x_k)  >= 0,

so truncating the kernel at degree T can only lower e^2, and the omitted
part is at most (sum_j |c_j|)^2 sum_{l > T} lt_l. Reports carry both ends.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigvalsh

from ._dims import dim_harmonic, dim_harmonic_array, dim_poly
from .errors import DomainError, ResourceLimitError, SingularGramError, ToleranceBudgetError
from .harmonic_model import require_rkhs, sobolev_sequence
from .special_fn import convolve, triple_product_table

#: Largest matrix handed to a dense eigensolver.
MATRIX_CAP = 512

#: Default relative tolerance of PSD verdicts.
PSD_TOL = 1e-9


@dataclass(frozen=True)
class WorstCaseReport:
    """``e`` is computed with the truncated kernel and is a certified lower
    end; ``e_upper`` adds the worst case of the omitted tail."""

    n: int
    e: float
    e_upper: float
    e_sq_decomposition: tuple
    truncation_degree: int
    tail_bound: float
    weights_used: np.ndarray | None = None


@dataclass(frozen=True)
class LowerBoundCertificate:
    """``bound`` is the certified (pessimistic) value; ``bound_optimistic``
    uses the upper end of every tail interval."""

    n: int
    bound: float
    kind: str
    bound_optimistic: float
    inputs: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.bound_optimistic - self.bound

    def to_dict(self):
        return {
            "kind": self.kind,
            "n": self.n,
            "bound": self.bound,
            "bound_optimistic": self.bound_optimistic,
            "slack": self.slack,
            "inputs": self.inputs,
        }


@dataclass(frozen=True)
class PsdVerdict:
    min_eigenvalue: float
    tolerance: float
    verdict: bool
    trace: float = 0.0


def psd_verdict(M, tol=PSD_TOL):
    """PSD test: min eigenvalue >= -tol * max(1, trace)."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] > MATRIX_CAP:
        raise ResourceLimitError(f"matrix size {M.shape[0]} exceeds cap {MATRIX_CAP}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise DomainError("matrix is not symmetric")
    lam_min = float(eigvalsh(0.5 * (M + M.T))[0]) if M.size else 0.0
    tr = float(np.trace(M))
    return PsdVerdict(min_eigenvalue=lam_min, tolerance=tol, verdict=lam_min >= -tol * max(1.0, tr), trace=tr)


# kernels on point sets --------------------------------------------------------


def _points(points, d):
    X = np.asarray(points, dtype=float)
    if X.size == 0:
        return np.zeros((0, d + 1))
    X = np.atleast_2d(X)
    if X.shape[1] != d + 1:
        raise DomainError(f"points must lie in R^{d + 1}")
    if np.any(np.abs(np.linalg.norm(X, axis=1) - 1) > 1e-10):
        raise DomainError("points must lie on the unit sphere")
    return X


def _inner(X):
    return np.clip(X @ X.T, -1.0, 1.0)


def _gegenbauer_pass(d, coeffs, tmat, c=None):
    """One recurrence sweep: kernel sum_l coeffs_l G_l(tmat) and, if c is
    given, the moments q_l = c^T G_l(tmat) c."""
    a = 0.5 * (d - 1)
    T = coeffs.size - 1
    K = np.full(tmat.shape, coeffs[0])
    q = np.empty(T + 1) if c is not None else None
    g_prev = np.ones_like(tmat)
    if c is not None:
        q[0] = c.sum() ** 2
    if T >= 1:
        g = tmat.copy()
        K += coeffs[1] * g
        if c is not None:
            q[1] = c @ g @ c
        for ell in range(1, T):
            g_prev, g = g, ((2 * ell + 2 * a) * tmat * g - ell * g_prev) / (ell + 2 * a)
            K += coeffs[ell + 1] * g
            if c is not None:
                q[ell + 1] = c @ g @ c
    return K, q


def kernel_gram(points, seq, tol=1e-12):
    """Truncated kernel matrix, its truncation degree and per-entry tail bound."""
    require_rkhs(seq)
    X = _points(points, seq.d)
    T, bound = seq.truncation_for(tol)
    K, _ = _gegenbauer_pass(seq.d, seq.lam_tilde[: T + 1], _inner(X))
    return K, T, bound


def worst_case_error(points, weights, seq, tol=1e-10):
    """Worst-case error of Q(f) = sum_j c_j f(x_j) on the unit ball of H."""
    require_rkhs(seq)
    X = _points(points, seq.d)
    c = np.asarray(weights, dtype=float).ravel()
    n = X.shape[0]
    if c.size != n:
        raise ValueError("one weight per node required")
    h = float(seq.lam_tilde[0])
    if n == 0:
        return WorstCaseReport(0, math.sqrt(h), math.sqrt(h), (h, 0.0, 0.0), 0, 0.0, c)
    T, bound = seq.truncation_for(tol / n**2)
    lt = seq.lam_tilde[: T + 1]
    K, q = _gegenbauer_pass(seq.d, lt, _inner(X), c)
    cross = -2.0 * h * c.sum()
    quadratic = float(c @ K @ c)
    naive = h + cross + quadratic
    if naive < -10 * tol:
        raise ToleranceBudgetError(f"e^2 = {naive:.3g} is below the tolerance budget")
    stable = h * (1.0 - c.sum()) ** 2 + float(lt[1:] @ q[1:])
    e_sq = max(stable, 0.0)
    e_sq_hi = e_sq + np.abs(c).sum() ** 2 * bound
    return WorstCaseReport(
        n=n,
        e=math.sqrt(e_sq),
        e_upper=math.sqrt(e_sq_hi),
        e_sq_decomposition=(h, cross, quadratic),
        truncation_degree=T,
        tail_bound=bound,
        weights_used=c,
    )


def optimal_weights(points, seq, tol=1e-10):
    """Weights minimizing the (truncated-kernel) worst-case error for fixed nodes.

    Solves K c = lt_0 * 1 by Cholesky.
    """
    require_rkhs(seq)
    X = _points(points, seq.d)
    n = X.shape[0]
    if n == 0:
        return np.zeros(0), worst_case_error(X, np.zeros(0), seq, tol)
    if n > MATRIX_CAP:
        raise ResourceLimitError(f"{n} nodes exceed the dense cap {MATRIX_CAP}")
    tmat = _inner(X)
    off = tmat[~np.eye(n, dtype=bool)]
    if off.size and off.max() > 1 - 1e-14:
        raise SingularGramError("duplicated nodes make the Gram matrix singular")
    T, _ = seq.truncation_for(tol / n**2)
    K, _ = _gegenbauer_pass(seq.d, seq.lam_tilde[: T + 1], tmat)
    try:
        ev = eigvalsh(K)
        if ev[0] <= 1e-14 * ev[-1]:
            raise SingularGramError(f"Gram matrix is numerically singular (cond {ev[-1] / max(ev[0], 1e-300):.3g})")
        cf = cho_factor(K)
    except LinAlgError as exc:
        raise SingularGramError(str(exc)) from exc
    c = cho_solve(cf, np.full(n, seq.lam_tilde[0]))
    return c, worst_case_error(X, c, seq, tol)


# approximation numbers --------------------------------------------------------


def _block_ends(d, L):
    return np.cumsum(dim_harmonic_array(d, np.arange(L + 1)))


def approx_number(n, seq):
    """a_n = lambda_l for the degree l with C(d, l-1) < n <= C(d, l)."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 1):
        raise DomainError("n must be >= 1")
    ends = _block_ends(seq.d, seq.L_store)
    ell = np.searchsorted(ends, n_arr, side="left")
    if np.any(ell > seq.L_store):
        raise DomainError("n beyond the stored multipliers")
    out = seq.lam[ell]
    return float(out) if out.ndim == 0 else out


def approx_degree(n, d):
    """The degree l with C(d, l-1) < n <= C(d, l)."""
    ell = 0
    while dim_poly(d, ell) < n:
        ell += 1
    return ell


def strong_equiv_target(d, alpha, beta):
    """The limit constant (2/d!)^(alpha/d) d^beta stated for a_n of H^{alpha,beta}."""
    return (2 / math.factorial(d)) ** (alpha / d) * d**beta


def sobolev_equiv_limit(d, alpha, beta):
    """Limit of n^(alpha/d) (ln n)^beta a_n for the H^{alpha,beta} multipliers.

    These satisfy lambda_l l^alpha (ln l)^beta -> 2^-beta rather than 1,
    which rescales the target by 2^-beta.
    """
    return strong_equiv_target(d, alpha, beta) * 2.0 ** (-beta)


def strong_equiv_ratio(n, alpha, beta, d, seq=None):
    """n^(alpha/d) (ln n)^beta a_n(H^{alpha,beta}(S^d))."""
    if n < 2:
        raise DomainError("n must be >= 2")
    if seq is None:
        seq = sobolev_sequence(d, alpha, beta, L_store=approx_degree(n, d) + 1)
    return n ** (alpha / d) * math.log(n) ** beta * approx_number(n, seq)


def c_constant(d, ell_max=200):
    """Smallest c with h_{floor(l/2)}^2 <= c h_l^2 for all l.

    With h_l^2 = 1/N(d, l) this is sup_l N(d, l)/N(d, floor(l/2)); the ratio
    tends to 2^(d-1), so the result is max(enumerated max, 2^(d-1)). The
    enumeration must be stationary: the second half of the range may not
    exceed the first.
    """
    if ell_max < 2:
        raise DomainError("ell_max must be >= 2")
    ells = np.arange(1, ell_max + 1)
    ratio = dim_harmonic_array(d, ells) / dim_harmonic_array(d, ells // 2)
    half = ell_max // 2
    first, second = ratio[:half].max(), ratio[half:].max()
    limit = 2.0 ** (d - 1)
    if second > max(first, limit) * (1 + 1e-12):
        raise DomainError(f"ratio not stationary up to {ell_max}; enlarge the range")
    return float(max(ratio.max(), limit))


# lower-bound certificates ------------------------------------------------------


def _floor_sqrt(x):
    return math.sqrt(max(x, 0.0))


def lower_bound_conv_squares(mu, nu, n, table):
    """For lt = mu*mu + nu*nu: e_n^2 >= lt_0 (1 - n lt_0 / ||lt||_1)."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(mu < 0) or np.any(nu < 0):
        raise DomainError("sequences must be nonnegative")
    lt = convolve(mu, mu, table) + convolve(nu, nu, table)
    total = float(lt.sum())
    b2 = 0.0 if total == 0 else lt[0] * (1 - n * lt[0] / total)
    b = _floor_sqrt(b2)
    return LowerBoundCertificate(
        n=n, bound=b, bound_optimistic=b, kind="conv_squares",
        inputs={"lam_tilde_0": float(lt[0]), "l1_norm": total, "table_L": table.L},
    )


def _require_monotone(seq):
    if np.any(np.diff(seq.lam_tilde) > 0):
        raise DomainError("kernel coefficients must be non-increasing")


def lower_bound_monotone(seq, n, c):
    """e_n^2 >= lt_0 (1 - 2cn lt_0 / (sum_{l>=1} lt_{2l} + 2c lt_0))."""
    _require_monotone(seq)
    h = float(seq.lam_tilde[0])
    s_lo, s_hi = seq.tail_sum(1, stride=2)

    def value(s):
        return _floor_sqrt(h * (1 - 2 * c * n * h / (s + 2 * c * h)))

    return LowerBoundCertificate(
        n=n, bound=value(s_lo), bound_optimistic=value(s_hi), kind="monotone",
        inputs={"c": c, "even_sum": (s_lo, s_hi), "L_store": seq.L_store},
    )


def lower_bound_min_form(seq, n, c):
    """e_n^2 >= min{lt_0 / 2, (1/(4cn)) sum_{l > 2cn} lt_{2l}}."""
    _require_monotone(seq)
    h = float(seq.lam_tilde[0])
    if n == 0:
        b = math.sqrt(h / 2)
        return LowerBoundCertificate(n=0, bound=b, bound_optimistic=b, kind="min_form", inputs={"c": c})
    start = math.floor(2 * c * n) + 1
    s_lo, s_hi = seq.tail_sum(start, stride=2)
    return LowerBoundCertificate(
        n=n,
        bound=math.sqrt(min(h / 2, s_lo / (4 * c * n))),
        bound_optimistic=math.sqrt(min(h / 2, s_hi / (4 * c * n))),
        kind="min_form",
        inputs={"c": c, "tail_start": start, "even_tail": (s_lo, s_hi), "L_store": seq.L_store},
    )


# PSD utilities -----------------------------------------------------------------


def schur_floor_check(M, tol=PSD_TOL):
    """Verdict on M o M - (1/n) diag(M) diag(M)^T being PSD."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    dg = np.diag(M)
    return psd_verdict(M * M - np.outer(dg, dg) / n, tol)


def lemma24_certificate(points, seq, a, tol=PSD_TOL):
    """Check that K(x_j, x_k) - a h(x_j) h(x_k) is PSD on the given nodes.

    The truncated kernel is used; the omitted tail is itself a PSD kernel,
    so a positive verdict carries over. The implied statement is that every
    rule on these nodes has e^2 >= ||h||^2 - 1/a; it is returned as
    a bound on e (None when the verdict fails).
    """
    if a <= 0:
        raise DomainError("a must be positive")
    K, _, _ = kernel_gram(points, seq, tol=1e-12)
    h = float(seq.lam_tilde[0])
    v = psd_verdict(K - a * h * h, tol)
    implied = _floor_sqrt(h - 1 / a) if v.verdict else None
    return v, implied


# convolution-square majorant ------------------------------------------------------


@dataclass(frozen=True)
class ConvolutionSquareCheck:
    """Numbers behind the monotone-sequence bound: mu_l = (2cA)^(-1/2) lt_{2l}."""

    c: float
    A: tuple
    conv: np.ndarray
    slack: np.ndarray
    lam_tilde: np.ndarray
    zero_term: tuple
    t_required: float

    @property
    def holds(self):
        """(mu*mu)_k <= lt_k + slack_k for every checked k."""
        return bool(np.all(self.conv <= self.lam_tilde + self.slack))

    @property
    def holds_certified(self):
        """(mu*mu)_k + slack_k <= lt_k: holds for the untruncated mu."""
        return bool(np.all(self.conv + self.slack <= self.lam_tilde))

    @property
    def t(self):
        return self.lam_tilde[0] - self.zero_term[1]

    @property
    def t_ok(self):
        return self.t >= self.t_required


def convolution_square_check(seq, c, L=120, k_max=60):
    """Evaluate (mu*mu)_k for k <= k_max with mu truncated at L, plus a tail slack.

    For l > L the omitted pairs contribute at most
    2 N(d,k) sum_{l > L} mu_l mu_{l-k} / N(d, l-k), using
    sum_s C_s^{l,k} = 1 and the monotonicity of mu_s / N(d, s).
    A is replaced by its certified lower end, which only enlarges mu.
    """
    _require_monotone(seq)
    if k_max > L:
        raise DomainError("k_max must not exceed the truncation L")
    d = seq.d
    M = seq.L_store // 2
    if M <= L + k_max:
        raise DomainError("store more multipliers (need L_store > 2 (L + k_max))")
    A_lo, A_hi = seq.tail_sum(0, stride=2)
    scale = (2 * c * A_lo) ** -0.5
    mu = scale * seq.lam_tilde[: 2 * M + 1 : 2]
    tail_mu = scale * seq.tail_sum(M + 1, stride=2)[1]
    h2 = 1.0 / dim_harmonic_array(d, np.arange(M + 1))
    table = triple_product_table(d, L)
    conv = convolve(mu[: L + 1], mu[: L + 1], table)[: k_max + 1]
    ells = np.arange(L + 1, M + 1)
    slack = np.empty(k_max + 1)
    for k in range(k_max + 1):
        near = np.sum(mu[ells] * mu[ells - k] * h2[ells - k])
        far = mu[M - k] * h2[M - k] * tail_mu
        slack[k] = 2 * dim_harmonic(d, k) * (near + far)
    zero_lo = float(np.sum(mu**2 * h2))
    zero_hi = zero_lo + mu[M] * h2[M] * tail_mu
    return ConvolutionSquareCheck(
        c=c,
        A=(A_lo, A_hi),
        conv=conv,
        slack=slack,
        lam_tilde=np.array(seq.lam_tilde[: k_max + 1]),
        zero_term=(zero_lo, zero_hi),
        t_required=(1 - 1 / (2 * c)) * float(seq.lam_tilde[0]),
    )
