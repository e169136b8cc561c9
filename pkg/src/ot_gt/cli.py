"""Command line front end.

Exit codes: 0 success, 1 invalid input, 2 internal invariant violation,
3 property check failure.  Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback

from .api import solve
from .core import (
    InternalError,
    SolveConfig,
    TransportError,
    ValidationError,
    load_instance,
    plan_to_dict,
)
from .harness import (
    SOLVERS,
    ExperimentSpec,
    image_pair_to_instance,
    read_image,
    rows_to_csv,
    run_experiment,
    run_property_suite,
    synthetic_instance,
)

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL, EXIT_CHECK = 0, 1, 2, 3

log = logging.getLogger("ot_gt")


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=None, separators=(",", ":"), sort_keys=True) + "\n"


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    cfg = SolveConfig(delta=args.delta, epsilon=args.epsilon,
                      debug_assertions=args.debug_assert, seed=args.seed)
    res = solve(inst, cfg)
    _write(_dump_json(plan_to_dict(inst, res.plan)), args.out)
    if args.stats:
        stats = res.stats.to_dict()
        stats.update(cost=res.cost, delta=cfg.delta, epsilon=cfg.epsilon, seed=cfg.seed)
        _write(_dump_json(stats), args.stats)
    print(f"cost={res.cost!r} phases={res.stats.phases} bound={res.stats.phase_bound} "
          f"seed={cfg.seed}", file=sys.stderr)
    return EXIT_OK


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"bad number list {text!r}") from None


def cmd_compare(args) -> int:
    if args.images:
        img1, img2 = (read_image(p) for p in args.images)
        inst = image_pair_to_instance(img1, img2, prune=args.prune)
        iid = "{}|{}".format(*args.images)
    elif args.synthetic:
        n_a, n_b = args.synthetic
        inst = synthetic_instance(n_a, n_b, args.seed)
        iid = f"synthetic-{n_a}x{n_b}-seed{args.seed}"
    elif args.instance:
        inst = load_instance(args.instance)
        iid = args.instance
    else:
        raise ValidationError("give an instance file, --images A B, or --synthetic NA NB")
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    spec = ExperimentSpec(
        instances=[(iid, inst)],
        deltas=_parse_floats(args.delta_list),
        epsilon=args.epsilon,
        solvers=solvers,
        repetitions=args.repetitions,
        seed=args.seed,
        sinkhorn_delta_factor=args.sinkhorn_factor,
    )
    rows = run_experiment(spec)
    _write(rows_to_csv(rows), args.csv)
    for r in rows:
        share = ""
        if r["solver"] == "gt" and r["t_total_ms"]:
            share = f" augment_share={r['t_augment_ms'] / r['t_total_ms']:.3%}"
        print(f"{r['solver']} delta={r['delta']} cost={r['cost']} phases={r['phases']}"
              f"{share}", file=sys.stderr)
    print(f"seed={args.seed}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    report = run_property_suite(seeds=args.seeds, size_cap=args.size_cap,
                                base_seed=args.seed)
    if report.ok:
        print(f"check passed: {report.runs} runs, seeds {args.seed}.."
              f"{args.seed + args.seeds - 1}", file=sys.stderr)
        return EXIT_OK
    f = report.failures[0]
    print(f"check FAILED (seed={f.seed}, delta={f.delta}): {f.reason}", file=sys.stderr)
    payload = _dump_json({"seed": f.seed, "delta": f.delta, "reason": f.reason,
                          "instance": f.instance})
    if args.dump:
        _write(payload, args.dump)
        print(f"failing instance written to {args.dump}", file=sys.stderr)
    else:
        sys.stderr.write(payload)
    return EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ot-gt", description="Additive-error optimal transport solver.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="{solve,compare}")

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("instance", help="JSON file with demands, supplies, costs")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--epsilon", type=float, default=0.5)
    s.add_argument("--out", help="plan output path (default stdout)")
    s.add_argument("--stats", help="write run statistics JSON here")
    s.add_argument("--debug-assert", action="store_true",
                   help="verify every invariant after each phase")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="sweep delta values over solvers, emit CSV")
    c.add_argument("instance", nargs="?")
    c.add_argument("--images", nargs=2, metavar=("IMG1", "IMG2"))
    c.add_argument("--synthetic", nargs=2, type=int, metavar=("NA", "NB"))
    c.add_argument("--prune", action="store_true", help="drop zero-intensity pixels")
    c.add_argument("--delta-list", default="0.2,0.1,0.05,0.025")
    c.add_argument("--epsilon", type=float, default=0.5)
    c.add_argument("--solvers", default=",".join(SOLVERS))
    c.add_argument("--sinkhorn-factor", type=float, default=1.0,
                   help="sinkhorn receives factor * delta")
    c.add_argument("--repetitions", type=int, default=1)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--csv", help="CSV output path (default stdout)")
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("check")
    k.add_argument("--seeds", type=int, default=20)
    k.add_argument("--size-cap", type=int, default=12)
    k.add_argument("--seed", type=int, default=0, help="first seed")
    k.add_argument("--dump", help="write the first failing instance here")
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InternalError as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return EXIT_INTERNAL
    except (ValidationError, TransportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
