"""Multiplier spaces H^Lambda(S^d), their kernels and coefficient norms.

A space is fixed by a non-increasing multiplier sequence lambda_l. Its
reproducing kernel is

    K(x, y) = sum_l lt_l G_l(x . y),     lt_l = lambda_l^2 N(d, l),

and it exists exactly when sum_l lt_l is finite. Stored sequences are
finite; the omitted tail is either known to vanish (``finite=True``) or is
bounded through a tail model lt_l ~ C l^(d-1-2 alpha) (ln l)^(-2 beta).
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from ._dims import dim_harmonic, dim_harmonic_array, dim_poly
from .errors import DomainError, TailCertificationError
from .special_fn import gegenbauer_series

__all__ = [
    "dim_harmonic",
    "dim_poly",
    "MultiplierSequence",
    "HarmonicCoefficients",
    "KernelEvaluation",
    "sobolev_sequence",
    "finite_sequence",
    "kernel_eval",
    "representer_norm_sq",
    "sobolev_norm",
    "besov_norm",
    "projection_error",
]

#: Default number of stored multipliers for Sobolev sequences.
DEFAULT_STORE = 1 << 14


@dataclass(frozen=True)
class MultiplierSequence:
    """Multipliers lambda_l (l <= L_store) of a space H^Lambda(S^d).

    ``tail_model`` is an ``(alpha, beta)`` pair declaring the decay of the
    unstored part, ``tail_limit`` (optional) the known limit of
    lt_l / (l^(d-1-2 alpha) (ln l)^(-2 beta)). ``finite`` means every
    multiplier beyond the stored range is zero.
    """

    d: int
    lam: np.ndarray
    tail_model: tuple | None = None
    tail_limit: float | None = None
    finite: bool = False
    rkhs: bool = True
    lam_tilde: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise DomainError("multipliers must be a nonempty vector")
        if np.any(lam < 0):
            raise DomainError("multipliers must be nonnegative")
        lam.setflags(write=False)
        lt = lam**2 * dim_harmonic_array(self.d, np.arange(lam.size))
        lt.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "lam_tilde", lt)
        if self.tail_model is not None:
            object.__setattr__(self, "tail_model", tuple(float(v) for v in self.tail_model))

    @property
    def L_store(self):
        return self.lam.size - 1

    @property
    def is_nonincreasing(self):
        return bool(np.all(np.diff(self.lam) <= 0))

    # tail bookkeeping ------------------------------------------------------

    def _model_constants(self):
        alpha, beta = self.tail_model
        p = self.d - 1 - 2 * alpha
        L = self.L_store
        lo_idx = max(2, int(0.9 * L))
        idx = np.arange(lo_idx, L + 1)
        if idx.size == 0:
            raise TailCertificationError("too few stored multipliers to fit the tail model")
        ratio = self.lam_tilde[idx] / _model(idx, p, beta)
        c_lo, c_hi = ratio.min(), ratio.max()
        if self.tail_limit is not None:
            c_lo = min(c_lo, self.tail_limit)
            c_hi = max(c_hi, self.tail_limit)
        return p, beta, c_lo, c_hi

    def remainder(self, start, stride=1):
        """Interval ``(lo, hi)`` for sum_{j >= start} lt_{stride j} over unstored indices only.

        Only indices stride*j > L_store contribute. Raises
        :class:`TailCertificationError` if the sequence has neither a finite
        support nor a tail model.
        """
        j1 = max(start, self.L_store // stride + 1)
        if self.finite:
            return 0.0, 0.0
        if self.tail_model is None:
            raise TailCertificationError("sequence has no tail model; its tail is unknown")
        p, beta, c_lo, c_hi = self._model_constants()
        x1 = float(stride * j1)
        _check_decreasing(p, beta, x1)
        integral, err = _model_integral(p, beta, x1)
        lo = c_lo * max(integral - err, 0.0) / stride
        hi = c_hi * (_model(x1, p, beta) + (integral + err) / stride)
        return float(lo), float(hi)

    def tail_sum(self, start, stride=1):
        """Certified interval for sum_{j >= start} lt_{stride j}."""
        L = self.L_store
        stored_idx = np.arange(start, L // stride + 1) * stride
        stored = float(self.lam_tilde[stored_idx].sum()) if stored_idx.size else 0.0
        lo, hi = self.remainder(start, stride)
        return stored + lo, stored + hi

    def total(self):
        """Certified interval for ||lt||_1 = K(x, x)."""
        return self.tail_sum(0)

    def truncation_for(self, tol):
        """Smallest T <= L_store with omitted-tail bound <= tol, plus that bound.

        If no stored T reaches ``tol`` but a tail model is present, returns
        ``(L_store, bound)`` with ``bound > tol``.
        """
        rem_hi = self.remainder(self.L_store + 1)[1]
        suffix = np.concatenate([np.cumsum(self.lam_tilde[::-1])[::-1][1:], [0.0]]) + rem_hi
        ok = np.flatnonzero(suffix <= tol)
        if ok.size:
            T = int(ok[0])
            return T, float(suffix[T])
        return self.L_store, float(suffix[-1])

    # serialization ---------------------------------------------------------

    def to_json(self):
        alpha, beta = self.tail_model if self.tail_model else (None, None)
        return json.dumps(
            {
                "kind": "multiplier_sequence",
                "d": self.d,
                "alpha": alpha,
                "beta": beta,
                "L": self.L_store,
                "values": self.lam.tolist(),
                "tail_limit": self.tail_limit,
                "finite": self.finite,
                "rkhs": self.rkhs,
            }
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("kind") != "multiplier_sequence":
            raise ValueError("not a multiplier_sequence document")
        tm = None if doc["alpha"] is None else (doc["alpha"], doc["beta"])
        return cls(
            d=doc["d"],
            lam=np.asarray(doc["values"]),
            tail_model=tm,
            tail_limit=doc.get("tail_limit"),
            finite=doc.get("finite", False),
            rkhs=doc.get("rkhs", True),
        )


def _model(x, p, beta):
    x = np.asarray(x, dtype=float)
    return x**p * np.log(x) ** (-2.0 * beta)


def _check_decreasing(p, beta, x):
    # d/dx log(x^p ln^{-2b} x) < 0  <=>  p ln x < 2 b
    if not (p * math.log(x) < 2 * beta):
        raise TailCertificationError(f"tail model is not decreasing beyond {x}")


def _model_integral(p, beta, x1):
    """int_{x1}^inf x^p (ln x)^(-2 beta) dx and an error estimate."""
    u0 = math.log(x1)
    if p == -1:
        if beta <= 0.5:
            raise TailCertificationError("tail diverges (alpha = d/2 needs beta > 1/2)")
        return u0 ** (1 - 2 * beta) / (2 * beta - 1), 0.0
    if p > -1:
        raise TailCertificationError("tail diverges (alpha < d/2)")
    q = -(p + 1)
    if beta == 0:
        return math.exp(-q * u0) / q, 0.0
    val, err = quad(lambda u: math.exp(-q * (u - u0)) * u ** (-2 * beta), u0, np.inf, epsabs=0, epsrel=1e-12)
    scale = math.exp(-q * u0)
    return val * scale, err * scale + 1e-12 * val * scale


def sobolev_sequence(d, alpha, beta, L_store=DEFAULT_STORE):
    """Multipliers (1 + l(l+d-1))^(-alpha/2) (ln(3 + l(l+d-1)))^(-beta) of H^{alpha,beta}(S^d)."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    ell = np.arange(L_store + 1, dtype=float)
    ev = ell * (ell + d - 1)
    lam = (1 + ev) ** (-alpha / 2) * np.log(3 + ev) ** (-beta)
    rkhs = alpha > d / 2 or (alpha == d / 2 and beta > 0.5)
    # lt_l / (l^(d-1-2a) ln^(-2b) l) -> 2^(1-2b) / (d-1)!
    limit = 2.0 ** (1 - 2 * beta) / math.factorial(d - 1)
    return MultiplierSequence(
        d=d, lam=lam, tail_model=(alpha, beta), tail_limit=limit, finite=False, rkhs=rkhs
    )


def finite_sequence(d, lam_tilde):
    """Finitely supported space given by its kernel coefficients lt_l."""
    lt = np.asarray(lam_tilde, dtype=float)
    if np.any(lt < 0):
        raise DomainError("kernel coefficients must be nonnegative")
    lam = np.sqrt(lt / dim_harmonic_array(d, np.arange(lt.size)))
    return MultiplierSequence(d=d, lam=lam, finite=True, rkhs=True)


def require_rkhs(seq):
    if not seq.rkhs:
        raise DomainError("sequence does not define a reproducing kernel Hilbert space")


@dataclass(frozen=True)
class KernelEvaluation:
    value: np.ndarray | float
    truncation_degree: int
    tail_bound: float


def kernel_eval(seq, t, tol=1e-12):
    """Truncated kernel sum_{l <= T} lt_l G_l(t) with a certified tail bound.

    The true kernel lies within ``tail_bound`` of ``value`` (in fact in
    ``[value, value + tail_bound]`` at t = 1 and symmetric elsewhere).
    """
    require_rkhs(seq)
    T, bound = seq.truncation_for(tol)
    if bound > tol:
        warnings.warn(
            f"kernel tail bound {bound:.3g} exceeds tol {tol:.3g} at the stored cutoff {T}",
            RuntimeWarning,
            stacklevel=2,
        )
    value = gegenbauer_series(seq.d, seq.lam_tilde[: T + 1], t)
    if np.ndim(value) == 0:
        value = float(value)
    return KernelEvaluation(value=value, truncation_degree=T, tail_bound=bound)


def representer_norm_sq(seq):
    """||h||^2 for the integration representer h = lt_0 (a constant)."""
    require_rkhs(seq)
    return float(seq.lam_tilde[0])


@dataclass(frozen=True)
class HarmonicCoefficients:
    """Coefficients c_{l,k} in an orthonormal harmonic basis, degree-major order.

    Degree l occupies ``coeffs[offset(l) : offset(l) + N(d, l)]``.
    """

    L: int
    coeffs: np.ndarray
    d: int = 2

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (dim_poly(self.d, self.L),):
            raise ValueError(f"expected {dim_poly(self.d, self.L)} coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, L, d=2):
        return cls(L=L, coeffs=np.zeros(dim_poly(d, L)), d=d)

    @classmethod
    def from_degrees(cls, blocks, d=2):
        """Build from a list whose entry l holds the N(d, l) coefficients of degree l."""
        blocks = [np.asarray(b, dtype=float) for b in blocks]
        return cls(L=len(blocks) - 1, coeffs=np.concatenate(blocks), d=d)

    def offset(self, ell):
        return 0 if ell == 0 else dim_poly(self.d, ell - 1)

    def block(self, ell):
        o = self.offset(ell)
        return self.coeffs[o : o + dim_harmonic(self.d, ell)]

    def degree_energy(self):
        """Vector of ||H_l f||_2^2 for l = 0..L."""
        return np.array([np.dot(b, b) for b in (self.block(l) for l in range(self.L + 1))])

    def padded(self, L):
        """Coefficients extended by zeros (or cut) to degree ``L``."""
        n = dim_poly(self.d, L)
        out = np.zeros(n)
        m = min(n, self.coeffs.size)
        out[:m] = self.coeffs[:m]
        return out

    def l2_norm(self):
        return float(np.linalg.norm(self.coeffs))

    def to_json(self):
        return json.dumps(
            {"kind": "harmonic_coefficients", "d": self.d, "L": self.L, "values": self.coeffs.tolist()}
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("kind") != "harmonic_coefficients":
            raise ValueError("not a harmonic_coefficients document")
        return cls(L=doc["L"], coeffs=np.asarray(doc["values"]), d=doc["d"])


def sobolev_norm(f, seq):
    """(sum_l lambda_l^-2 ||H_l f||^2)^(1/2)."""
    if seq.L_store < f.L:
        raise DomainError("multipliers not stored up to the degree of f")
    lam = seq.lam[: f.L + 1]
    energy = f.degree_energy()
    if np.any((lam == 0) & (energy > 0)):
        raise DomainError("f has mass where a multiplier vanishes")
    safe = np.where(lam > 0, lam, 1.0)
    return float(np.sqrt(np.sum(energy / safe**2)))


def besov_norm(f, alpha, beta):
    """Dyadic-block norm (sum_j 2^(2 j alpha) j^(2 beta) ||sigma_j f||^2)^(1/2).

    Blocks: sigma_1 holds degrees 0..2, sigma_j degrees 2^(j-1)+1 .. 2^j.
    """
    energy = f.degree_energy()
    total = 0.0
    j, lo, hi = 1, 0, 2
    while lo <= f.L:
        e = energy[lo : min(hi, f.L) + 1].sum()
        total += 2.0 ** (2 * j * alpha) * float(j) ** (2 * beta) * e
        j += 1
        lo, hi = hi + 1, 2**j
    return float(np.sqrt(total))


def projection_error(f, n):
    """E_n(f)_2 = ||f - S_n f||_2."""
    energy = f.degree_energy()
    return float(np.sqrt(energy[n + 1 :].sum())) if n < f.L else 0.0
