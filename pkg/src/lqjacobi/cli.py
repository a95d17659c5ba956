"""Command line: ``lqjacobi analyze | trace | fixture``.

Exit codes: 0 when every cross-check agrees, 2 when one disagrees, 1 for
input errors and for inputs that only admit a limited (spectral) analysis.
Conjugate times are counted on the half-open interval ``(0, horizon]``.
"""
import argparse
import sys

from .analysis import AnalysisConfig, analyze
from .exceptions import LqJacobiError, ParameterError
from .jacobi import JacobiCurve, curve_trace
from .model import check_admissible
from .serialization import field_to_dict, load_input, write_json, write_trace_csv
from .spectral import build_imaginary_jordan_fixture
from .tolerances import DEFAULT_TOLERANCES

EXIT_INPUT = 1


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit code 2 is reserved for disagreement
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _tolerances(items):
    overrides = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise ParameterError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            overrides[name.strip()] = float(value)
        except ValueError as exc:
            raise ParameterError(f"--tol {name}: {value!r} is not a number") from exc
    try:
        return DEFAULT_TOLERANCES.with_overrides(**overrides)
    except KeyError as exc:
        raise ParameterError(str(exc.args[0])) from exc


def _config(args):
    return AnalysisConfig(args.horizon, args.grid_step, _tolerances(args.tol), args.eps_shift, args.seed,
                          output=args.output)


def _open_output(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def cmd_analyze(args):
    report = analyze(load_input(args.problem), _config(args))
    text = write_json(report.to_dict(), args.output)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    for line in report.diagnostics:
        print(f"note: {line}", file=sys.stderr)
    return report.exit_code


def cmd_trace(args):
    config = _config(args)
    rows = curve_trace(JacobiCurve(load_input(args.problem)), 0.0, config.horizon, args.grid_step,
                       config.tolerances)
    fh = _open_output(args.output)
    try:
        write_trace_csv(rows, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_fixture(args):
    field = build_imaginary_jordan_fixture(args.kind, args.k, args.beta, args.sign)
    admissible = check_admissible(field).admissible
    data = field_to_dict(field, admissible, order_kind=args.kind, k=args.k, beta=args.beta, sign=args.sign)
    text = write_json(data, args.output)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    return 0


def _sign(text):
    value = {"+": 1, "+1": 1, "1": 1, "-": -1, "-1": -1}.get(text.strip())
    if value is None:
        raise argparse.ArgumentTypeError(f"sign must be + or -, got {text!r}")
    return value


def build_parser():
    parser = _Parser(prog="lqjacobi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, horizon, grid_step):
        p.add_argument("problem", help="problem JSON (n, k, A, B, Q) or a hamiltonian_field fixture")
        p.add_argument("--horizon", type=float, default=horizon, help="analyse (0, horizon]")
        p.add_argument("--grid-step", type=float, default=grid_step, help="detection or trace grid step")
        p.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override one tolerance")
        p.add_argument("--eps-shift", type=float, default=None, help="endpoint shift of the Maslov interval")
        p.add_argument("--seed", type=int, default=0, help="seed of the random chart and sample draws")
        p.add_argument("--output", "-o", default=None, help="output file (default stdout)")

    p = sub.add_parser("analyze", help="full analysis report as JSON")
    common(p, 30.0, None)
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("trace", help="CSV trace of det X, sigma_min X and the intersection dimension")
    common(p, 10.0, 0.01)
    p.set_defaults(func=cmd_trace)
    p = sub.add_parser("fixture", help="normal-form Hamiltonian with a pair of Jordan blocks at +-i beta")
    p.add_argument("--kind", choices=("even", "odd"), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--sign", type=_sign, default=1, help="+ or -")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LqJacobiError, OSError) as exc:
        print(f"lqjacobi: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
