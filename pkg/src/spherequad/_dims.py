"""Dimension counts for spherical harmonics and spherical polynomials."""

import math

import numpy as np


def dim_harmonic(d: int, ell: int) -> int:
    """Dimension N(d, ell) of the degree-``ell`` harmonics on S^d."""
    if d < 2 or ell < 0:
        raise ValueError(f"need d >= 2 and ell >= 0, got d={d}, ell={ell}")
    if ell == 0:
        return 1
    # (2l+d-1) (l+d-2)! / ((d-1)! l!), kept in exact integers
    num = (2 * ell + d - 1) * math.comb(ell + d - 2, ell)
    return num // (d - 1)


def dim_poly(d: int, m: int) -> int:
    """Dimension C(d, m) of the spherical polynomials of degree <= ``m`` on S^d."""
    if d < 2 or m < 0:
        raise ValueError(f"need d >= 2 and m >= 0, got d={d}, m={m}")
    return (2 * m + d) * math.comb(m + d - 1, m) // d


def dim_harmonic_array(d: int, ells) -> np.ndarray:
    """Float N(d, x) for an array of degrees.

    Real (non-integer) degrees use the continuous extension
    (2x+d-1)/(d-1) * prod_{i=1}^{d-2} (x+i)/i, which is what tail integrals
    need. Degree 0 maps to 1.
    """
    x = np.asarray(ells, dtype=float)
    out = (2 * x + d - 1) / (d - 1)
    for i in range(1, d - 1):
        out = out * (x + i) / i
    out = np.where(x == 0, 1.0, out)
    return out
