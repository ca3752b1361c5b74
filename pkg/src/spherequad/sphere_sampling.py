"""Real spherical harmonics on S^2, product Gauss rules and MZ diagnostics.

Harmonics are orthonormal for the normalized surface measure, so
Y_{0,0} = 1. Columns are ordered by degree; inside degree l the order is
m = 0, then (cos m phi, sin m phi) pairs for m = 1..l.
"""

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eigvalsh

from ._dims import dim_poly
from .errors import DomainError, RankDeficientError
from .special_fn import gauss_rule

#: Eigenvalues below this fraction of the largest one count as zero.
RANK_RTOL = 1e-12


def _normalize(points):
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[-1] != 3:
        raise DomainError("explicit harmonics are only provided on S^2 (points in R^3)")
    r = np.linalg.norm(p, axis=1)
    if np.any(np.abs(r - 1) > 1e-10):
        raise DomainError("points must lie on the unit sphere")
    return p / r[:, None]


def _legendre_by_order(L, t):
    """Yield (m, P) with P[j] = normalized associated Legendre of degree m+j, order m.

    Normalized per order so that (1/2) int_{-1}^1 P^2 dt = 1.
    """
    s = np.sqrt(np.clip(1 - t * t, 0.0, None))
    pmm = np.ones_like(t)
    for m in range(L + 1):
        if m > 0:
            pmm = pmm * s * math.sqrt((2 * m + 1) / (2 * m))
        out = np.empty((L - m + 1,) + t.shape)
        out[0] = pmm
        if L > m:
            out[1] = math.sqrt(2 * m + 3) * t * pmm
        for ell in range(m + 2, L + 1):
            a = math.sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            out[ell - m] = a * (t * out[ell - m - 1] - b * out[ell - m - 2])
        yield m, out


def _column(ell, m, trig):
    # trig: 0 for cos, 1 for sin
    return ell * ell + (0 if m == 0 else 2 * m - 1 + trig)


def real_sph_harmonics(L, points):
    """All Y_{l,k}(p), l <= L, as an array of shape (n_points, (L+1)^2).

    A single point (shape (3,)) returns a vector.
    """
    single = np.ndim(points) == 1
    p = _normalize(points)
    t = p[:, 2]
    phi = np.arctan2(p[:, 1], p[:, 0])
    Y = np.empty((p.shape[0], (L + 1) ** 2))
    for m, P in _legendre_by_order(L, t):
        ells = np.arange(m, L + 1)
        if m == 0:
            Y[:, ells * ells] = P.T
        else:
            c = math.sqrt(2) * np.cos(m * phi)
            s = math.sqrt(2) * np.sin(m * phi)
            Y[:, ells * ells + 2 * m - 1] = (P * c).T
            Y[:, ells * ells + 2 * m] = (P * s).T
    return Y[0] if single else Y


def synthesize(f, points):
    """Evaluate a function given by HarmonicCoefficients at points on S^2.

    Streams over orders, so memory stays O(L * n_points).
    """
    if f.d != 2:
        raise DomainError("synthesis needs explicit harmonics (d = 2)")
    p = _normalize(points)
    t = p[:, 2]
    phi = np.arctan2(p[:, 1], p[:, 0])
    L, c = f.L, f.coeffs
    vals = np.zeros(p.shape[0])
    for m, P in _legendre_by_order(L, t):
        ells = np.arange(m, L + 1)
        if m == 0:
            vals += c[ells * ells] @ P
        else:
            vals += math.sqrt(2) * (
                (c[ells * ells + 2 * m - 1] @ P) * np.cos(m * phi)
                + (c[ells * ells + 2 * m] @ P) * np.sin(m * phi)
            )
    return vals


@dataclass(frozen=True)
class MZConstants:
    A: float
    B: float
    kappa: float


@dataclass(frozen=True)
class PointFamily:
    """One layer of an MZ family: nodes on S^2 with positive weights tau.

    ``exactness`` is the polynomial degree a construction integrates exactly
    with weights tau (None when unknown).
    """

    N: int
    nodes: np.ndarray
    tau: np.ndarray
    kind: str = "custom"
    exactness: int | None = None
    measured: MZConstants | None = None

    def __post_init__(self):
        nodes = _normalize(self.nodes)
        tau = np.asarray(self.tau, dtype=float).ravel()
        if tau.shape[0] != nodes.shape[0]:
            raise ValueError("one weight per node required")
        if np.any(tau <= 0):
            raise DomainError("MZ weights must be positive")
        nodes.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "tau", tau)

    @property
    def size(self):
        return self.nodes.shape[0]

    def with_measured(self, N=None):
        return replace(self, measured=mz_condition(self, self.N if N is None else N))

    # CSV -----------------------------------------------------------------

    def to_csv(self, extra=None):
        """CSV text: metadata comment, header x,y,z,tau[,extra...], one row per node."""
        buf = io.StringIO()
        buf.write("# sphere-quad v1\n")
        buf.write(f"# N={self.N} kind={self.kind}\n")
        extra = extra or {}
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "z", "tau", *extra])
        cols = [np.asarray(v) for v in extra.values()]
        for i, (x, tau) in enumerate(zip(self.nodes, self.tau)):
            w.writerow([repr(float(v)) for v in (*x, tau, *(c[i] for c in cols))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        """Parse :meth:`to_csv` output. Errors name the offending line."""
        N, kind = None, "custom"
        header = None
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("N="):
                        try:
                            N = int(tok[2:])
                        except ValueError:
                            raise ValueError(f"line {lineno}: bad degree {tok!r}") from None
                    elif tok.startswith("kind="):
                        kind = tok[5:]
                continue
            fields = [f.strip() for f in line.split(",")]
            if header is None:
                header = fields
                if header[:4] != ["x", "y", "z", "tau"]:
                    raise ValueError(f"line {lineno}: expected header x,y,z,tau, got {line!r}")
                continue
            if len(fields) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(fields)}")
            try:
                rows.append([float(v) for v in fields])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric field in {line!r}") from None
        if header is None:
            raise ValueError("no header row found")
        if N is None:
            raise ValueError("missing '# N=...' metadata line")
        if not rows:
            raise ValueError("no node rows")
        data = np.array(rows)
        extra = {name: data[:, 4 + i] for i, name in enumerate(header[4:])}
        fam = cls(N=N, nodes=data[:, :3], tau=data[:, 3], kind=kind)
        return fam, extra


def product_rule(N):
    """(N+1) Gauss-Legendre polar nodes times 2N+2 equispaced azimuths.

    Integrates every polynomial of degree <= 2N+1 exactly, so the layer has
    A = B = 1 at degree N.
    """
    if N < 0:
        raise DomainError("degree must be >= 0")
    g = gauss_rule(2, N + 1)
    M = 2 * N + 2
    phi = 2 * np.pi * np.arange(M) / M
    t = np.repeat(g.nodes, M)
    ph = np.tile(phi, N + 1)
    s = np.sqrt(1 - t * t)
    nodes = np.column_stack([s * np.cos(ph), s * np.sin(ph), t])
    tau = np.repeat(g.weights, M) / M
    return PointFamily(N=N, nodes=nodes, tau=tau, kind="product", exactness=2 * N + 1)


def weighted_design(fam, N):
    """Rows sqrt(tau_i) Y_j(x_i) for the (N+1)^2 harmonics of degree <= N."""
    return real_sph_harmonics(N, fam.nodes) * np.sqrt(fam.tau)[:, None]


def mz_condition(fam, N):
    """MZ constants (A, B, kappa) of a layer at degree N.

    A and B are the extreme eigenvalues of the weighted Gram matrix of the
    orthonormal basis; A = 0 (kappa = inf) flags rank deficiency.
    """
    d_N = dim_poly(2, N)
    Phi = weighted_design(fam, N)
    ev = eigvalsh(Phi.T @ Phi)
    B = float(ev[-1])
    A = float(ev[0])
    if fam.size < d_N or A <= RANK_RTOL * B:
        A = 0.0
    kappa = B / A if A > 0 else math.inf
    return MZConstants(A=A, B=B, kappa=kappa)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def jittered_family(N, eps, seed, min_A=0.0):
    """Product-rule nodes each moved by an angle <= eps in a random direction.

    Weights are kept, so kappa > 1 for eps > 0. Raises
    :class:`RankDeficientError` when the measured A is not above ``min_A``.
    """
    base = product_rule(N)
    rng = np.random.default_rng(seed)
    x = base.nodes
    v = rng.standard_normal(x.shape)
    v -= np.sum(v * x, axis=1)[:, None] * x
    v /= np.linalg.norm(v, axis=1)[:, None]
    ang = eps * rng.random(x.shape[0])
    moved = np.cos(ang)[:, None] * x + np.sin(ang)[:, None] * v
    fam = PointFamily(N=N, nodes=moved, tau=base.tau, kind=f"jittered(eps={eps!r},seed={seed})")
    mz = mz_condition(fam, N)
    if not mz.A > min_A:
        raise RankDeficientError(f"jittered layer lost the MZ property (A = {mz.A:.3g})")
    return replace(fam, measured=mz)
