"""Command-line entry point: ``oceanlayer {solve,sweep,mms,corrector-check,thickness}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness


def _eps_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oceanlayer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("solve", "limit solve, corrector and viscous solve for one eps"),
        ("sweep", "eps sweep with rate fits and the resolution gate"),
        ("mms", "manufactured-solution order study for both solvers"),
        ("corrector-check", "corrector residual identities and norm scaling"),
        ("thickness", "boundary-layer width probes along an eps sweep"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="TOML experiment file (defaults apply when omitted)")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--jobs", type=int, default=1, help="parallel eps jobs")
        p.add_argument("--eps", type=_eps_list, help="comma-separated eps list override")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = harness.load_config(args.config, args.eps)
        if args.eps is not None and args.command == "corrector-check":
            cfg["corrector"]["eps"] = args.eps
        out = args.out or cfg["output"]["dir"]
        if args.command == "solve":
            res = harness.run_single(cfg, out_dir=out)
            summary = res["row"]
        elif args.command == "sweep":
            rep = harness.run_sweep(cfg, jobs=args.jobs, out_dir=out)
            summary = {k: r.slope for k, r in rep.rates.items()}
            summary["mesh_gate_ok"] = rep.gate_ok
        elif args.command == "thickness":
            rep = harness.run_thickness(cfg, jobs=args.jobs, out_dir=out)
            summary = rep.thickness()
        elif args.command == "mms":
            res = harness.run_mms(cfg, out_dir=out)
            summary = {r["solver"]: r["richardson_order"] for r in res["rows"]}
        else:
            res = harness.run_corrector_check(cfg, out_dir=out)
            summary = {k: v["slope"] for k, v in res["rates"].items()}
    except harness.CompatibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(exc.report.table(), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(harness._jsonable(summary), indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
