"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 domain error.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .chain import classify, remove_laziness, symmetry_ratio
from .embedding import build_embedding, green_via_local_time
from .errors import (ConfigurationError, DomainError, GreenChainError, PreconditionError,
                     SolverError, SpecParseError, ValidationError)
from .exact import green
from .mc import SimConfig, simulate_line, simulate_tree
from .network import green_via_voltage
from .report import (Report, _record, dumps_stable, line_records, sample_pairs, skipped,
                     tree_records)
from .specs import load_spec
from .tree import green_tree, green_tree_via_voltage, path_ratio

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3


def _vertex(model, token: str, kind: str):
    if kind == "line":
        try:
            return int(token)
        except ValueError:
            raise DomainError(f"state {token!r} is not an integer") from None
    by_name = {str(v): v for v in model.vertices}
    if token not in by_name:
        raise DomainError(f"unknown vertex {token!r}")
    return by_name[token]


def cmd_ratio(args) -> int:
    spec = load_spec(args.spec)
    model = spec.model(args.normalize)
    j, k = _vertex(model, args.j, spec.kind), _vertex(model, args.k, spec.kind)
    value = symmetry_ratio(model, j, k) if spec.kind == "line" else path_ratio(model, j, k)
    if args.json:
        report = Report(spec.digest, spec.kind, args.tolerance,
                        [_record(j, k, value, {}, skipped("not requested"))])
        print(dumps_stable(report.as_dict()))
    else:
        print(repr(float(value)))
    return EXIT_OK


def cmd_green(args) -> int:
    spec = load_spec(args.spec)
    model = spec.model(args.normalize)
    x, y = _vertex(model, args.x, spec.kind), _vertex(model, args.y, spec.kind)
    line = spec.kind == "line"
    if args.route == "exact":
        res = green(model, x, y) if line else green_tree(model, x, y)
    elif args.route == "voltage":
        res = green_via_voltage(model, x, y) if line else green_tree_via_voltage(model, x, y)
    elif args.route == "localtime":
        if not line:
            raise PreconditionError("the local-time route applies to line chains only")
        res = green_via_local_time(model, x, y)
    else:
        cfg = SimConfig(args.trials, args.seed, args.max_steps)
        est = simulate_line(model, x, y, cfg) if line else simulate_tree(model, x, y, cfg)
        res = est.as_result()
        if est.flagged:
            print(f"warning: {est.truncated_trials} of {cfg.trials} trials hit max_steps",
                  file=sys.stderr)
    if args.json:
        out = {"input_digest": spec.digest, "x": x, "y": y, "route": res.route.value,
               "value": res.value}
        if res.stderr is not None:
            out["stderr"] = res.stderr
        print(dumps_stable(out))
    elif res.stderr is not None:
        print(f"G({x}, {y}) = {res.value:.10g} ± {res.stderr:.3g}  [{res.route.value}, {args.trials} trials]")
    else:
        print(f"G({x}, {y}) = {float(res.value)!r}  [{res.route.value}]")
    return EXIT_OK


def cmd_check(args) -> int:
    spec = load_spec(args.spec)
    model = spec.model(args.normalize)
    mc = SimConfig(args.mc_trials, args.seed) if args.mc_trials else None
    states = model.interior
    pairs = sample_pairs(states, args.pairs, args.seed)
    records = line_records(model, pairs, mc) if spec.kind == "line" else tree_records(model, pairs, mc)
    report = Report(spec.digest, spec.kind, args.tolerance, records)
    if args.json:
        print(dumps_stable(report.as_dict()))
    else:
        for rec in report.as_dict()["records"]:
            dev = rec["max_rel_dev"]
            dev_txt = f"{dev:.3e}" if isinstance(dev, float) else dev
            print(f"({rec['j']}, {rec['k']})  closed={rec['ratio_closed_form']:.12g}  max_rel_dev={dev_txt}")
        print(f"{len(records)} pairs, verdict: {report.verdict}")
    for rec in report.failing:
        print(f"FAIL pair ({rec['j']}, {rec['k']}): max_rel_dev {rec['max_rel_dev']:.3e} "
              f"> {args.tolerance:g}", file=sys.stderr)
    return EXIT_OK if report.verdict == "pass" else EXIT_FAIL


def cmd_classify(args) -> int:
    spec = load_spec(args.spec)
    verdict = classify(spec.coefficients(), args.horizon, args.divergence_threshold,
                       args.convergence_tolerance)
    if args.json:
        print(dumps_stable(dict(verdict.as_dict(), input_digest=spec.digest)))
    else:
        print(f"verdict: {verdict.kind.value}")
        print(f"left_sum:  {verdict.left_sum:.12g} ({verdict.left_status.value})")
        print(f"right_sum: {verdict.right_sum:.12g} ({verdict.right_status.value})")
        print(f"horizon: {verdict.horizon}")
    return EXIT_OK


def cmd_embed(args) -> int:
    spec = load_spec(args.spec)
    if spec.kind != "line":
        raise PreconditionError("the Brownian embedding applies to line chains only")
    chain = spec.chain(args.normalize)
    lazy = chain.is_lazy
    emb = build_embedding(remove_laziness(chain) if lazy else chain)
    t, x = emb.t, emb.x
    rows = [{"n": n, "t": (float(t[i]) if i < len(t) else None), "x": float(x[i])}
            for i, n in enumerate(range(emb.lo, emb.hi + 1))]
    if args.json:
        print(dumps_stable({"input_digest": spec.digest, "anchor": emb.anchor,
                            "laziness_removed": lazy, "rows": rows}))
    else:
        if lazy:
            print("# holding probabilities removed before embedding")
        print(f"{'n':>6}  {'t_n':>24}  {'x_n':>24}")
        for row in rows:
            t_txt = "" if row["t"] is None else format(row["t"], ".17g")
            print(f"{row['n']:>6}  {t_txt:>24}  {format(row['x'], '.17g'):>24}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greenchain",
        description="Green's functions of birth-death chains on lines and trees.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("spec", help="line or tree spec file (JSON)")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--normalize", action="store_true",
                       help="rescale transition rows to sum to one before use")

    p = sub.add_parser("ratio", help="closed-form G(j,k)/G(k,j)")
    common(p)
    p.add_argument("j")
    p.add_argument("k")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("green", help="expected visits G(x,y) by one route")
    common(p)
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--route", choices=("exact", "voltage", "localtime", "mc"), default="exact")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=1_000_000)
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("check", help="compare every route against the closed form")
    common(p)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--pairs", type=int, default=None, help="sample this many pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-trials", type=int, default=0,
                   help="also run Monte Carlo with this many trials per direction")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", help="recurrence verdict for a chain on all integers")
    p.add_argument("spec", help="spec file with a 'coefficients' entry")
    p.add_argument("--json", action="store_true")
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--divergence-threshold", type=float, default=1e12)
    p.add_argument("--convergence-tolerance", type=float, default=1e-3)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("embed", help="print the embedding spacings t_n and points x_n")
    common(p)
    p.set_defaults(func=cmd_embed)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecParseError, ValidationError, ConfigurationError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DomainError, PreconditionError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except GreenChainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
