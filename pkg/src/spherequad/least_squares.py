"""Weighted least-squares approximation and least-squares quadrature on S^2.

On a layer with nodes x_k and weights tau_k,

    L_N f = argmin_{p in Pi_N} sum_k tau_k |f(x_k) - p(x_k)|^2,

and the least-squares quadrature is I_N f = int L_N f. The solve factors
the weighted design matrix ``diag(sqrt tau) Y`` by QR; the normal equations
are never formed.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, solve_triangular, svdvals

from ._dims import dim_poly
from .errors import RankDeficientError
from .harmonic_model import HarmonicCoefficients
from .sphere_sampling import MZConstants, PointFamily, real_sph_harmonics

#: Fits on layers with a larger measured kappa emit a warning.
KAPPA_CAP = 1e6

#: Relative size of the smallest R diagonal treated as rank loss.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class LsFit:
    N: int
    coeffs: HarmonicCoefficients
    residual_discrete: float
    family_ref: PointFamily
    mz: MZConstants | None = None


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    exactness_claim: int

    def apply(self, values):
        return float(np.dot(self.weights, values))

    def to_csv(self, fam):
        """PointFamily CSV with an extra ``w`` column."""
        return fam.to_csv(extra={"w": self.weights})


def _factor(fam, N):
    d_N = dim_poly(2, N)
    if fam.size < d_N:
        raise RankDeficientError(f"{fam.size} nodes cannot determine {d_N} coefficients")
    sq = np.sqrt(fam.tau)
    Phi = real_sph_harmonics(N, fam.nodes) * sq[:, None]
    Q, R = qr(Phi, mode="economic", overwrite_a=True, check_finite=False)
    diag = np.abs(np.diag(R))
    if diag.min() <= RANK_RTOL * diag.max():
        raise RankDeficientError(f"layer is rank deficient at degree {N}")
    return sq, Q, R


def _measure(R):
    s = svdvals(R, check_finite=False)
    A, B = float(s[-1] ** 2), float(s[0] ** 2)
    return MZConstants(A=A, B=B, kappa=B / A)


def ls_fit(fam, N, samples, measure=False, kappa_cap=KAPPA_CAP):
    """Weighted least-squares polynomial of degree <= N through ``samples``.

    With ``measure=True`` the MZ constants are read off the singular values
    of the triangular factor and attached to the result.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (fam.size,):
        raise ValueError(f"expected {fam.size} samples, got {samples.shape}")
    sq, Q, R = _factor(fam, N)
    mz = _measure(R) if measure else fam.measured
    if mz is not None and mz.kappa > kappa_cap:
        warnings.warn(f"ill-conditioned layer: kappa = {mz.kappa:.3g}", RuntimeWarning, stacklevel=2)
    b = sq * samples
    qb = Q.T @ b
    c = solve_triangular(R, qb, check_finite=False)
    r = b - Q @ qb
    resid = float(r @ r)
    return LsFit(N=N, coeffs=HarmonicCoefficients(L=N, coeffs=c), residual_discrete=resid, family_ref=fam, mz=mz)


def hyperinterpolation(fam, N, samples):
    """Discrete Fourier coefficients sum_k tau_k f(x_k) Y(x_k); no solve.

    Equals the least-squares fit when the weights integrate Pi_{2N} exactly.
    """
    samples = np.asarray(samples, dtype=float)
    if fam.exactness is not None:
        if fam.exactness < 2 * N:
            warnings.warn("hyperinterpolation needs a rule exact on Pi_2N", RuntimeWarning, stacklevel=2)
    elif fam.measured is None or abs(fam.measured.kappa - 1) > 1e-8:
        warnings.warn("layer is not known to have kappa = 1", RuntimeWarning, stacklevel=2)
    Y = real_sph_harmonics(N, fam.nodes)
    return HarmonicCoefficients(L=N, coeffs=Y.T @ (fam.tau * samples))


def ls_quadrature(fam, N):
    """Weights w with sum_k w_k f(x_k) = int L_N f for every sample vector.

    Since only Y_{0,0} = 1 has a nonzero integral, w is the functional that
    extracts the constant coefficient of the fit: w = sqrt(tau) Q R^-T e_0.
    """
    sq, Q, R = _factor(fam, N)
    e0 = np.zeros(R.shape[0])
    e0[0] = 1.0
    z = solve_triangular(R, e0, trans="T", check_finite=False)
    w = sq * (Q @ z)
    return QuadratureRule(nodes=fam.nodes, weights=w, exactness_claim=N)


def approx_error_l2(f, fit):
    """Exact ||f - L_N f||_2 by Parseval over the union of both supports."""
    L = max(f.L, fit.coeffs.L)
    diff = f.padded(L) - fit.coeffs.padded(L)
    return float(math.sqrt(diff @ diff))


def discrete_inner(fam, u, v):
    """<u, v>_(N) = sum_k tau_k u_k v_k for sampled values."""
    return float(np.sum(fam.tau * np.asarray(u) * np.asarray(v)))
