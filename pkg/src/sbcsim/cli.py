"""Command line: ``sbcsim run|compare|audit|stats``.

Exit codes: 0 ok / equal / clean, 1 divergence or violation, 2 bad input.
"""

import argparse
import json
import sys

from . import harness
from .kernel import ConfigError, load_scenario, read_trace, run_scenario, write_trace


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_run(args):
    script = load_scenario(args.scenario)
    sim = run_scenario(script, args.stack)
    if args.out:
        write_trace(sim.trace, args.out)
    else:
        for ev in sim.trace:
            print(ev.to_json())
    return 0


def cmd_compare(args):
    rep = harness.compare(load_scenario(args.scenario))
    _dump(rep.to_dict(), args.out)
    return 0 if rep.verdict == "equal" else 1


def cmd_audit(args):
    rep = harness.audit(read_trace(args.trace))
    _dump(rep.to_dict(), args.out)
    return 0 if rep.clean else 1


def cmd_stats(args):
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    rep = harness.stats(load_scenario(args.scenario), args.trials)
    _dump(rep, args.out)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="sbcsim", description="Round-based broadcast stack simulator")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run a scenario and write its trace")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", help="trace file (JSON lines); stdout if omitted")
    p.add_argument("--stack", help="override the scenario's stack, e.g. fbc_ideal")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("compare", help="protocol stack vs its ideal twin")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("audit", help="budget and sequentiality audit of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("stats", help="repeat a scenario under derived seeds")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_stats)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
