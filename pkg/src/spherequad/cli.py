"""``sphere-quad`` command line."""

import argparse
import sys

from .errors import DomainError
from .experiments import (
    ExperimentConfig,
    FamilySpec,
    cmd_approx_numbers,
    cmd_bracket,
    cmd_decay,
    cmd_mz_check,
    n_range,
)

DECAY_HELP = """\
Least-squares decay on S^2. The test function f* has coefficients
c_{l,k} = lambda_l / sqrt((l+1) N(2,l)) on every k of degree l (up to 3 max N),
spreading mass evenly inside each degree so that the axis-aligned product
rule sees no preferred harmonic. The fitted slope of ln error against ln N
excludes the two smallest N."""


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="sphere-quad", description="Quadrature errors and sampling numbers on spheres.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, kernel=True):
        sp.add_argument("--out", help="write to this file instead of stdout")
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        if kernel:
            sp.add_argument("--d", type=int, default=2)
            sp.add_argument("--alpha", type=float, default=1.0)
            sp.add_argument("--beta", type=float, default=0.0)
            sp.add_argument("--n-min", type=int)
            sp.add_argument("--n-max", type=int)
            sp.add_argument("--n-list", type=_int_list, help="comma-separated list (overrides --n-min/--n-max)")
            sp.add_argument("--tol", type=float, default=1e-10)
        return sp

    common(sub.add_parser("approx-numbers", help="approximation numbers and the strong-equivalence ratio"))
    dec = common(sub.add_parser("decay", help="least-squares error decay",
                                description=DECAY_HELP, formatter_class=argparse.RawDescriptionHelpFormatter))
    dec.add_argument("--family", default="product", help="product | jittered:EPS | jittered:EPS/N")
    dec.add_argument("--seed", type=int, default=0)
    common(sub.add_parser("bracket", help="lower bounds against optimal-weight errors"))

    mz = common(sub.add_parser("mz-check", help="MZ constants of a family CSV"), kernel=False)
    mz.add_argument("path", help="PointFamily CSV file")
    mz.add_argument("--N", type=int, help="degree (default: from the file)")
    mz.add_argument("--kappa-cap", type=float, default=1e6)

    ex = common(sub.add_parser("export-family", help="write a layer as PointFamily CSV"), kernel=False)
    ex.add_argument("--N", type=int, required=True)
    ex.add_argument("--family", default="product", help="product | jittered:EPS | jittered:EPS/N")
    ex.add_argument("--seed", type=int, default=0)
    return p


def _n_list(args):
    if args.n_list:
        return args.n_list
    if args.n_min is not None or args.n_max is not None:
        lo = args.n_min if args.n_min is not None else 1
        hi = args.n_max if args.n_max is not None else lo
        return n_range(lo, hi)
    return ()


def run(argv=None):
    """Return the rendered output text for ``argv``."""
    args = build_parser().parse_args(argv)
    if args.command == "mz-check":
        try:
            with open(args.path) as fh:
                text = fh.read()
        except OSError as exc:
            raise DomainError(f"cannot read {args.path}: {exc}") from exc
        return cmd_mz_check(text, args.N, args.kappa_cap).render(args.fmt), args
    if args.command == "export-family":
        fam = FamilySpec.parse(args.family, args.seed).build(args.N)
        return fam.to_csv(), args
    family = FamilySpec.parse(getattr(args, "family", "product"), getattr(args, "seed", 0))
    config = ExperimentConfig(
        command=args.command, d=args.d, alpha=args.alpha, beta=args.beta,
        n_list=_n_list(args), family=family, tol=args.tol, fmt=args.fmt, out=args.out,
    )
    cmd = {"approx-numbers": cmd_approx_numbers, "decay": cmd_decay, "bracket": cmd_bracket}[args.command]
    return cmd(config).render(args.fmt), args


def main(argv=None):
    try:
        text, args = run(argv)
    except (DomainError, ValueError, ArithmeticError) as exc:
        print(f"sphere-quad: error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
