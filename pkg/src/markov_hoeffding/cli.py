"""Command-line front end: ``markov-hoeffding <command> [options]``.

Exit codes: 0 success, 1 a verified inequality failed, 2 invalid input,
3 spectral-gap assumption violated, 4 numerical failure.
"""

import argparse
import json
import math
import sys
import warnings

from . import bounds, simulate, spectral, suites
from .errors import AssumptionWarning, HoeffdingError

EXIT_FALSIFIED = 1


def _num(x):
    """JSON-safe float: non-finite values become null."""
    x = float(x)
    return x if math.isfinite(x) else None


def _emit(args, payload, lines):
    if args.json:
        print(json.dumps(payload))
    else:
        for line in lines:
            print(line)


def _bias(args):
    if args.p is None:
        if args.nu_norm is not None:
            raise HoeffdingError("--nu-norm requires --p")
        return None
    return bounds.InitialBias(args.p, 1.0 if args.nu_norm is None else args.nu_norm)


def _tail(args):
    return args.tail.replace("-", "_")


def _add_bias_flags(p):
    p.add_argument("--p", type=float, help="Hoelder exponent for a non-stationary start (inf ok)")
    p.add_argument("--nu-norm", type=float, help="||d nu / d pi||_p (default 1)")
    p.add_argument("--tail", choices=("upper", "lower", "two-sided"), default="upper")


def cmd_bound(args):
    params = bounds.ChainParams(args.mu, args.lam)
    bias = _bias(args)
    tail = _tail(args)
    forms = ("sharp", "loose") if args.form == "both" else (args.form,)
    flags = []
    payload = {"mu": params.mu, "lambda": params.lam, "eps": args.eps, "n": args.n,
               "tail": tail, "p": _num(args.p) if args.p is not None else None,
               "nu_norm": bias.nu_norm if bias else None}
    degenerate = params.mu in (0.0, 1.0)
    for form in forms:
        if form == "sharp" and degenerate:
            flags.append("degenerate-mean")
            form_used = "loose"
        else:
            form_used = form
        log_b = bounds.tail_log_bound(params, args.eps, args.n, tail, form_used, bias)
        payload[f"log_{form}"] = _num(log_b)
        payload[f"prob_{form}"] = math.exp(log_b)

    t_star = theta_star = delta = None
    side = params if tail != "lower" else params.flipped()
    if tail != "two_sided" and 0.0 < side.mu < 1.0 and args.eps <= side.mu_bar:
        report = bounds.bound_report(side, args.eps, args.n)
        t_star, theta_star, delta = report.t_star, report.theta_star, report.delta
        flags.extend(report.flags)
    payload.update(t_star=_num(t_star) if t_star is not None else None,
                   theta_star=_num(theta_star) if theta_star is not None else None,
                   delta=delta, flags=flags)
    lines = []
    for form in forms:
        lines.append(f"log_{form} = {payload[f'log_{form}']!r}")
        lines.append(f"prob_{form} = {payload[f'prob_{form}']!r}")
    lines += [f"t_star = {t_star!r}", f"theta_star = {theta_star!r}", f"delta = {delta!r}"]
    if flags:
        lines.append("flags = " + ",".join(flags))
    _emit(args, payload, lines)
    return 0


def cmd_invert_n(args):
    params = bounds.ChainParams(args.mu, args.lam)
    n = bounds.sample_size(params, args.eps, args.delta, _bias(args), args.form, _tail(args))
    _emit(args, {"n": n, "form": args.form, "tail": _tail(args)}, [f"n = {n}"])
    return 0


def cmd_invert_eps(args):
    params = bounds.ChainParams(args.mu, args.lam)
    hw = bounds.half_width(params, args.n, args.delta, args.form, _bias(args), _tail(args))
    lines = [f"eps = {hw.epsilon!r}"] + (["flags = saturated"] if hw.saturated else [])
    _emit(args, {"eps": hw.epsilon, "saturated": hw.saturated, "form": args.form}, lines)
    return 0


def cmd_gap(args):
    kernel = spectral.load_chain(args.chain)
    pi = spectral.stationary(kernel)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionWarning)
        lam = spectral.spectral_norm_gap(kernel, pi)
    violated = lam >= 1.0 - 1e-12
    payload = {"pi": pi.tolist(), "lambda": lam, "assumption_violated": violated}
    lines = [f"pi = {pi.tolist()!r}", f"lambda = {lam!r}"]
    if args.reversible:
        rho = spectral.reversible_rho(kernel, pi)
        payload.update(rho=rho.rho, lambda_vb=rho.lambda_vb)
        lines += [f"rho = {rho.rho!r}", f"lambda_vb = {rho.lambda_vb!r}"]
    if violated:
        lines.append("flags = assumption-violated")
    _emit(args, payload, lines)
    if violated and not args.allow_violation:
        print("error: lambda >= 1, the spectral-gap assumption fails", file=sys.stderr)
        return 3
    return 0


def cmd_verify(args):
    records = suites.run_suite(args.suite, args.seed, args.instances, args.workers)
    failed = numerical = 0
    for rec in records:
        out = rec.to_json()
        out.update(lhs=_num(rec.lhs), rhs=_num(rec.rhs), margin=_num(rec.margin))
        print(json.dumps(out))
        if not rec.passed:
            failed += 1
            numerical += rec.check.endswith("numerical_failure")
    print(f"verify {args.suite}: {len(records) - failed} passed, {failed} failed",
          file=sys.stderr)
    if numerical:
        return 4
    return EXIT_FALSIFIED if failed else 0


def _inline_experiment(args):
    if args.chain_kind == "finite":
        if not args.chain_file:
            raise HoeffdingError("--chain-kind finite needs --chain-file")
        chain = simulate.ChainConfig("finite", kernel=spectral.load_chain(args.chain_file))
        f_spec = simulate.FSpec("vector")
    else:
        chain = simulate.ChainConfig(args.chain_kind, lam=args.lam, rho=args.rho,
                                     sampler=args.sampler)
        f_spec = simulate.FSpec(args.f_spec, args.a, args.b)
    for name in ("n", "eps"):
        if getattr(args, name) is None:
            raise HoeffdingError(f"--{name} is required without --config")
    return simulate.TailExperiment(chain, f_spec, args.n, args.eps, args.replicates,
                                   args.seed, args.estimate_mu)


def cmd_simulate(args):
    exp = simulate.load_experiment(args.config) if args.config else _inline_experiment(args)
    res = simulate.run_tail_experiment(exp, workers=args.workers)
    if args.csv:
        simulate.append_csv(res, args.csv)
    row = res.csv_row()
    if args.json:
        print(json.dumps({**row, "violation": res.violation, "notes": list(res.notes)}))
    else:
        print(",".join(simulate.CSV_COLUMNS))
        print(",".join(str(row[c]) for c in simulate.CSV_COLUMNS))
        for note in res.notes:
            print(f"note: {note}")
        print("verdict: " + ("VIOLATION" if res.violation else "no violation"))
    return EXIT_FALSIFIED if res.violation else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="markov-hoeffding",
        description="Hoeffding-type tail bounds for Markov chains with an L2 spectral gap.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="tail bound for given (mu, lambda, eps, n)")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--form", choices=("sharp", "loose", "both"), default="both")
    _add_bias_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("invert-n", help="smallest n reaching confidence delta")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--form", choices=("sharp", "loose"), default="sharp")
    _add_bias_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_invert_n)

    p = sub.add_parser("invert-eps", help="deviation eps reaching confidence delta at n")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--form", choices=("sharp", "loose"), default="sharp")
    _add_bias_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_invert_eps)

    p = sub.add_parser("gap", help="stationary law and L2 spectral gap of a chain file")
    p.add_argument("--chain", required=True)
    p.add_argument("--reversible", action="store_true")
    p.add_argument("--allow-violation", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("verify", help="randomized exact-oracle verification suites")
    p.add_argument("--suite", choices=suites.SUITES + ("all",), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=25)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo tail frequency against the bounds")
    p.add_argument("--config", help="experiment JSON file")
    p.add_argument("--chain-kind", choices=("finite", "doeblin", "ar1"), default="doeblin")
    p.add_argument("--chain-file")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--sampler", default="uniform")
    p.add_argument("--f-spec", choices=("indicator_positive", "affine_clamp"),
                   default="affine_clamp")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--n", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--replicates", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimate-mu", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="append the result row to this CSV file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HoeffdingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
