"""Table-producing experiments behind the command-line interface.

Each ``cmd_*`` function takes a validated :class:`ExperimentConfig` and
returns a :class:`Table`; nothing is printed here. Output is deterministic
for a fixed configuration and seed.
"""

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._dims import dim_harmonic_array, dim_poly
from .error_bounds import (
    approx_number,
    c_constant,
    lower_bound_min_form,
    optimal_weights,
    sobolev_equiv_limit,
    strong_equiv_target,
    worst_case_error,
)
from .errors import DomainError
from .harmonic_model import HarmonicCoefficients, sobolev_sequence
from .least_squares import approx_error_l2, ls_fit, ls_quadrature
from .sphere_sampling import PointFamily, jittered_family, mz_condition, product_rule, synthesize

SCHEMA = "sphere-quad v1"

#: Slack above this fraction of a value marks the row WIDE.
WIDE_FRACTION = 0.1

DEFAULT_N_LIST = {
    "decay": (8, 12, 16, 24, 32, 40, 48, 56, 64),
    "bracket": (0, 2, 5, 10, 20, 50, 100),
}


@dataclass(frozen=True)
class FamilySpec:
    """``product`` or ``jittered`` with angle ``eps`` (divided by N if ``per_N``)."""

    kind: str = "product"
    eps: float = 0.0
    per_N: bool = False
    seed: int = 0

    @classmethod
    def parse(cls, text, seed=0):
        """Accept ``product``, ``jittered:EPS`` or ``jittered:EPS/N``."""
        if text == "product":
            return cls(seed=seed)
        if text.startswith("jittered:"):
            arg = text.split(":", 1)[1]
            per_N = arg.endswith("/N")
            if per_N:
                arg = arg[:-2]
            try:
                eps = float(arg)
            except ValueError:
                raise DomainError(f"bad jitter angle in {text!r}") from None
            if not eps >= 0:
                raise DomainError("jitter angle must be >= 0")
            return cls(kind="jittered", eps=eps, per_N=per_N, seed=seed)
        raise DomainError(f"unknown family {text!r} (use product or jittered:EPS[/N])")

    def build(self, N):
        if self.kind == "product":
            return product_rule(N)
        eps = self.eps / max(N, 1) if self.per_N else self.eps
        return jittered_family(N, eps, self.seed)

    def label(self):
        if self.kind == "product":
            return "product"
        return f"jittered:{self.eps!r}{'/N' if self.per_N else ''}"


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    d: int = 2
    alpha: float = 1.0
    beta: float = 0.0
    n_list: tuple = ()
    family: FamilySpec = field(default_factory=FamilySpec)
    tol: float = 1e-10
    kappa_cap: float = 1e6
    fmt: str = "csv"
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.command not in ("approx-numbers", "decay", "bracket", "mz-check", "export-family"):
            raise DomainError(f"unknown command {self.command!r}")
        if int(self.d) != self.d or self.d < 2:
            raise DomainError("d must be an integer >= 2")
        if self.command in ("decay", "bracket") and self.d != 2:
            raise DomainError(f"{self.command} runs on S^2 only (d = 2)")
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if self.command == "bracket" and not rkhs_pair(self.d, self.alpha, self.beta):
            raise DomainError(
                f"(alpha, beta) = ({self.alpha}, {self.beta}) is not a reproducing kernel space on S^{self.d}: "
                f"need alpha > {self.d / 2} or alpha = {self.d / 2} with beta > 1/2"
            )
        if self.fmt not in ("csv", "json"):
            raise DomainError("format must be csv or json")
        if not self.tol > 0:
            raise DomainError("tolerance must be positive")
        if any(int(n) != n or n < 0 for n in self.n_list):
            raise DomainError("list entries must be nonnegative integers")

    def ns(self):
        return tuple(int(n) for n in self.n_list) or DEFAULT_N_LIST.get(self.command, ())


def rkhs_pair(d, alpha, beta):
    return alpha > d / 2 or (alpha == d / 2 and beta > 0.5)


def n_range(n_min, n_max, count=20):
    """Integers spread geometrically over [n_min, n_max]."""
    if n_min < 1 or n_max < n_min:
        raise DomainError("need 1 <= n_min <= n_max")
    return tuple(sorted({int(round(v)) for v in np.geomspace(n_min, n_max, count)}))


# tables --------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# {SCHEMA}\n")
        for k, v in self.meta.items():
            buf.write(f"# {k}={v}\n")
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()

    def to_json(self):
        doc = {
            "schema": SCHEMA,
            "meta": self.meta,
            "columns": {c: [_jsonable(r[i]) for r in self.rows] for i, c in enumerate(self.columns)},
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"

    def render(self, fmt):
        return self.to_csv() if fmt == "csv" else self.to_json()


def fit_slope(x, y):
    """Least-squares slope of ln y against ln x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def upper_rate(N, alpha, beta, d=2):
    """C_{alpha,beta}(N); nan outside the covered range or for N < 2."""
    if N < 2:
        return math.nan
    if alpha > d / 2:
        return N**-alpha * math.log(N) ** -beta
    if alpha == d / 2 and beta > 0.5:
        return N**-alpha * math.log(N) ** (-beta + 0.5)
    return math.nan


def decay_function(alpha, beta, L_f):
    """f* with c_{l,k} = lambda_l / sqrt((l+1) N(2,l)) on every k of degree l <= L_f.

    Mass is spread evenly inside each degree so that no single harmonic is
    favoured by the axis-aligned product rule.
    """
    lam = sobolev_sequence(2, alpha, beta, L_store=L_f).lam
    ells = np.arange(L_f + 1)
    mult = dim_harmonic_array(2, ells).astype(int)
    vals = lam / np.sqrt((ells + 1) * mult)
    return HarmonicCoefficients(L=L_f, coeffs=np.repeat(vals, mult), d=2)


# commands ---------------------------------------------------------------------------


def cmd_approx_numbers(config):
    d, a, b = config.d, config.alpha, config.beta
    ns = config.ns() or n_range(1, 10**4)
    ell_max = 0
    while dim_poly(d, ell_max) < max(ns):
        ell_max += 1
    seq = sobolev_sequence(d, a, b, L_store=ell_max + 1)
    target = strong_equiv_target(d, a, b)
    limit = sobolev_equiv_limit(d, a, b)
    t = Table(
        columns=["n", "ell", "a_n", "ratio", "target", "sobolev_limit"],
        meta={"command": "approx-numbers", "d": d, "alpha": a, "beta": b},
    )
    ends = np.cumsum(dim_harmonic_array(d, np.arange(ell_max + 2)))
    for n in ns:
        if n < 1:
            raise DomainError("approximation numbers start at n = 1")
        an = approx_number(n, seq)
        ell = int(np.searchsorted(ends, n, side="left"))
        ratio = n ** (a / d) * math.log(n) ** b * an if n >= 2 else math.nan
        t.rows.append((n, ell, an, ratio, target, limit))
    return t


def cmd_decay(config):
    a, b = config.alpha, config.beta
    Ns = config.ns()
    if min(Ns) < 1:
        raise DomainError("decay degrees must be >= 1")
    L_f = 3 * max(Ns)
    f = decay_function(a, b, L_f)
    t = Table(
        columns=["N", "l_N", "d_N", "kappa", "error", "C_rate", "ratio"],
        meta={
            "command": "decay", "d": 2, "alpha": a, "beta": b,
            "family": config.family.label(), "seed": config.family.seed, "L_f": L_f,
        },
    )
    for N in Ns:
        try:
            fam = config.family.build(N)
            samples = synthesize(f, fam.nodes)
            fit = ls_fit(fam, N, samples, measure=True, kappa_cap=config.kappa_cap)
        except Exception as exc:
            raise type(exc)(f"decay experiment at N={N}: {exc}") from exc
        err = approx_error_l2(f, fit)
        C = upper_rate(N, a, b)
        t.rows.append((N, fam.size, dim_poly(2, N), fit.mz.kappa, err, C, err / C if C == C else math.nan))
    errs = [r[4] for r in t.rows]
    if len(Ns) > 3:
        t.meta["slope"] = repr(fit_slope(Ns[2:], errs[2:]))
        t.meta["slope_excludes"] = "two smallest N"
    return t


def _product_degree(n):
    """Largest N with (N+1)(2N+2) <= n, or -1."""
    N = -1
    while (N + 2) * (2 * N + 4) <= n:
        N += 1
    return N


def _wide(lo, hi):
    return (hi - lo) > WIDE_FRACTION * abs(lo) if hi == hi else False


def cmd_bracket(config):
    a, b = config.alpha, config.beta
    seq = sobolev_sequence(2, a, b)
    c = c_constant(2, 200)
    ns = config.ns()
    L_f = 3 * max(_product_degree(max(ns)), 1)
    f = decay_function(a, b, L_f)
    integral = float(f.coeffs[0])
    t = Table(
        columns=[
            "n", "N", "nodes", "lower", "lower_optimistic", "lower_wide",
            "e_opt", "e_opt_upper", "e_wide", "quad_error", "C_rate", "ok",
        ],
        meta={
            "command": "bracket", "d": 2, "alpha": a, "beta": b, "c": c,
            "L_store": seq.L_store, "tol": config.tol, "L_f": L_f,
        },
    )
    for n in ns:
        lb = lower_bound_min_form(seq, n, c)
        N = _product_degree(n)
        if N >= 0:
            fam = product_rule(N)
            _, rep = optimal_weights(fam.nodes, seq, config.tol)
            qr = ls_quadrature(fam, N)
            quad_err = abs(integral - qr.apply(synthesize(f, fam.nodes)))
        else:
            nodes = np.array([[0.0, 0.0, 1.0]])[:n]
            rep = optimal_weights(nodes, seq, config.tol)[1] if n else worst_case_error(nodes, [], seq)
            quad_err = math.nan
        ok = lb.bound <= rep.e + config.tol
        if not ok:
            raise ArithmeticError(f"bracket violated at n={n}: lower {lb.bound} > e {rep.e}")
        t.rows.append((
            n, N, rep.n, lb.bound, lb.bound_optimistic, _wide(lb.bound, lb.bound_optimistic),
            rep.e, rep.e_upper, _wide(rep.e, rep.e_upper), quad_err, upper_rate(N, a, b), ok,
        ))
    pos = [(r[0], r[3]) for r in t.rows if r[0] >= 2 and r[3] > 0]
    if len(pos) >= 3:
        x = np.array([p[0] for p in pos], float)
        y = np.array([p[1] for p in pos])
        t.meta["lower_slope"] = repr(fit_slope(x, y))
        gamma = np.polyfit(np.log(np.log(x)), np.log(y * np.sqrt(x)), 1)[0]
        t.meta["lower_log_exponent"] = repr(float(gamma))
    return t


def cmd_mz_check(text, N=None, kappa_cap=1e6):
    """MZ diagnostics for a PointFamily CSV (as text)."""
    fam, _ = PointFamily.from_csv(text)
    N = fam.N if N is None else N
    mz = mz_condition(fam, N)
    t = Table(
        columns=["N", "l_N", "d_N", "A", "B", "kappa", "pass"],
        meta={"command": "mz-check", "kind": fam.kind, "kappa_cap": kappa_cap},
    )
    t.rows.append((N, fam.size, dim_poly(2, N), mz.A, mz.B, mz.kappa, mz.A > 0 and mz.kappa <= kappa_cap))
    return t
