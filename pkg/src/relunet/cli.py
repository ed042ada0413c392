"""Command line interface: ``relunet <command> ...``.

Commands: build, eval, inspect, verify, sweep, catalog.  Randomness comes
from ``--seed``; when the flag is absent the ``RELUNET_SEED`` environment
variable is used, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import serialize
from .approximator import build_approximator
from .errors import RelunetError
from .network import evaluate, stats
from .suite import SuiteRow, run_verification_suite, write_csv
from .targets import TARGET_NAMES, catalog, get_target


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RELUNET_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise RelunetError(f"RELUNET_SEED must be an integer, got {env!r}") from None
    return 0


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_build(args):
    target = get_target(args.target, args.d, _seed(args))
    approx = build_approximator(target, args.N, args.L, args.d, args.delta,
                                shift_policy=args.shift_policy, modulus=target.modulus)
    net = approx.network.with_metadata(target=args.target, seed=_seed(args))
    serialize.save(net, args.output)
    s = stats(net)
    print(f"wrote {args.output}: K={approx.K} width={s.width} depth={s.depth} "
          f"params={s.param_count} epsilon={approx.epsilon!r}", file=sys.stderr)
    return 0


def cmd_eval(args):
    net = serialize.load(args.network)
    src = open(args.input) if args.input else sys.stdin
    with src:
        rows = [line for line in src if line.strip() and not line.lstrip().startswith("#")]
    if not rows:
        return 0
    x = np.array([[float(v) for v in line.split(",")] for line in rows])
    y = evaluate(net, x)
    for out in y:
        print(",".join(repr(float(v)) for v in out))
    return 0


def cmd_inspect(args):
    net = serialize.load(args.network)
    doc = stats(net).to_dict()
    doc["metadata"] = net.metadata
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _report(result):
    write_csv(result.reports, sys.stdout)
    for rep in result.reports:
        v = rep.values
        tag = "PASS" if rep.passed else "FAIL"
        detail = "; ".join(rep.failures)
        print(f"{tag} {v['target']} d={v['d']} N={v['N']} L={v['L']}"
              + (f": {detail}" if detail else ""), file=sys.stderr)
    return 0 if result.passed else 1


def cmd_verify(args):
    row = SuiteRow(args.target, args.N, args.L, args.d, _seed(args), args.delta_policy,
                   args.samples, args.lp_samples, args.bound_scale)
    return _report(run_verification_suite([row]))


def cmd_sweep(args):
    seed = _seed(args)
    rows = [SuiteRow(t, N, L, d, seed, args.delta_policy, args.samples, args.lp_samples,
                     args.bound_scale)
            for t in args.targets.split(",") for d in _int_list(args.d)
            for N in _int_list(args.N) for L in _int_list(args.L)]
    result = run_verification_suite(rows)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_csv(result.reports, fh)
    return _report(result)


def cmd_catalog(args):
    for t in catalog(args.d, _seed(args)):
        m = t.modulus
        print(f"{t.name:12s} d={t.d} modulus={m.lam:.6g}*r^{m.alpha:g}  {t.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relunet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None)

    def check_opts(sp):
        sp.add_argument("--delta-policy", choices=("default", "lp"), default="default")
        sp.add_argument("--samples", type=int, default=10_000,
                        help="points for the uniform error estimate")
        sp.add_argument("--lp-samples", type=int, default=20_000,
                        help="Monte Carlo points for the L1/L2 estimates")
        sp.add_argument("--bound-scale", type=float, default=1.0,
                        help="multiply bounds before comparing (below 1 is stricter)")

    sp = sub.add_parser("build", help="build an approximator and save it as JSON")
    sp.add_argument("--target", choices=TARGET_NAMES, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--shift-policy", choices=("empirical", "modulus"), default="empirical")
    sp.add_argument("-o", "--output", required=True)
    common(sp)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("eval", help="evaluate a saved network on CSV points")
    sp.add_argument("network")
    sp.add_argument("--input", help="CSV file with one point per line (default stdin)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("inspect", help="print width, depth and parameter count")
    sp.add_argument("network")
    sp.set_defaults(func=cmd_inspect)

    sp = sub.add_parser("verify", help="build, measure and check one configuration")
    sp.add_argument("--target", choices=TARGET_NAMES, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--d", type=int, default=1)
    check_opts(sp)
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="verify a grid of configurations, CSV output")
    sp.add_argument("--targets", default="dist_inv_pi")
    sp.add_argument("--N", default="1,2,3")
    sp.add_argument("--L", default="1,2")
    sp.add_argument("--d", default="1")
    sp.add_argument("-o", "--output", help="also write the CSV to this file")
    check_opts(sp)
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("catalog", help="list the built-in target functions")
    sp.add_argument("--d", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RelunetError, KeyError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
