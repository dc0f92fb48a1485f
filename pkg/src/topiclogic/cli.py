"""Command-line entry point: ``topiclogic {check,predict,simulate,sweep} <file>``.

Exit status is 0 when every enabled comparison passed, 2 when some
comparison failed and 1 on input or validation errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import scenario
from .errors import ScenarioError, TopicLogicError

EXIT_OK, EXIT_INPUT, EXIT_COMPARISON = 0, 1, 2


def _common(p: argparse.ArgumentParser):
    p.add_argument("file", help="scenario JSON document")
    p.add_argument("--out", help="directory for report.json and trajectory files")
    p.add_argument("--seed", type=int, help="sample x0 uniformly in [-a, a] with this seed")
    p.add_argument("--timing", action="store_true", help="include wall-clock timing in the printed report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topiclogic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("check", "certificates and condition reports"), ("predict", "add analytic limits")):
        _common(sub.add_parser(name, help=text))
    sim = sub.add_parser("simulate", help="integrate and compare against predictions")
    _common(sim)
    sim.add_argument("--model", choices=["1", "2", "both"])
    sim.add_argument("--t-end", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--method", choices=["rk4", "expm", "expm_step"])
    sw = sub.add_parser("sweep", help="condition verdicts over a geometric alpha grid")
    _common(sw)
    sw.add_argument("--alpha-min", type=float, default=0.25)
    sw.add_argument("--alpha-max", type=float, default=4.0)
    sw.add_argument("--points", type=int, default=25)
    sw.add_argument("--simulate", action="store_true", help="also integrate at every grid point")
    sw.add_argument("--t-end", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = scenario.load_scenario(args.file)
        model = getattr(args, "model", None)
        cfg = scenario.with_overrides(
            cfg,
            seed=args.seed,
            model=None if model is None else (model if model == "both" else int(model)),
            t_end=getattr(args, "t_end", None),
            dt=getattr(args, "dt", None),
            method=getattr(args, "method", None),
        )
        extra = {}
        if args.command == "sweep":
            extra = dict(alpha_min=args.alpha_min, alpha_max=args.alpha_max, points=args.points, sweep_simulate=args.simulate)
        report = scenario.run(args.command, cfg, args.out or cfg.out, **extra)
    except ScenarioError as exc:
        for path, msg in exc.violations:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (TopicLogicError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out or cfg.out:
        for comp in report.comparisons:
            print(f"{'PASS' if comp['passed'] else 'FAIL'} {comp['name']}")
        print(f"report written to {args.out or cfg.out}")
    else:
        sys.stdout.write(scenario.dumps(report.to_dict(include_timing=args.timing)))
    return EXIT_OK if report.passed else EXIT_COMPARISON


if __name__ == "__main__":
    sys.exit(main())
