"""Command-line interface.

Subcommands: simulate (trajectory artifacts only), analyze (run the
scenario's analyses), certify (pre-run C-S certificate only), report (full
pipeline with figures).  Exit codes: 0 success, 1 scenario validation
failure, 2 analysis error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .certificate import certificate_check, certificate_input, corollary_check
from .errors import ErgochainError, ParseError, ValidationError
from .report import canonical_json, run_scenario
from .scenario import build_runtime, parse_scenario


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True, metavar="PATH",
                        help="scenario JSON file")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (default: runs/<scenario name>)")
    parser.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="override the scenario seed")
    parser.add_argument("--horizon", type=int, default=None, metavar="N",
                        help="override the scenario horizon")
    parser.add_argument("--tolerance", action="append", default=[],
                        metavar="NAME=VALUE",
                        help="override a tolerance (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergochain",
        description="Simulate consensus models and test ergodicity / "
                    "class-ergodicity of their transition chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the model, write trajectory CSV")
    p_ana = sub.add_parser("analyze", help="run the scenario's analyses")
    p_cert = sub.add_parser("certify", help="pre-run Cucker-Smale certificate")
    p_rep = sub.add_parser("report", help="simulate + analyze + figures")
    for p in (p_sim, p_ana, p_cert, p_rep):
        _common_flags(p)
    p_ana.add_argument("--plots", action="store_true",
                       help="also render figures")
    p_rep.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
    return parser


def _load(args):
    sc = parse_scenario(args.scenario)
    if args.seed is not None:
        sc.seed = args.seed
    if args.horizon is not None:
        sc.horizon = args.horizon
    for item in args.tolerance:
        if "=" not in item:
            raise ValidationError("tolerances", f"expected NAME=VALUE, got {item!r}")
        name, _, value = item.partition("=")
        if name not in sc.tolerances:
            raise ValidationError("tolerances", f"unknown tolerance {name!r}")
        sc.tolerances[name] = int(value) if name == "s_max" else float(value)
    return sc


def _out_dir(args, sc) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path("runs") / sc.name


def _cmd_certify(args) -> int:
    sc = _load(args)
    if sc.model != "cucker-smale":
        print("certify requires a cucker-smale scenario", file=sys.stderr)
        return 1
    bundle = build_runtime(sc)
    inp = certificate_input(bundle.cs_spec, bundle.cs_state0)
    cert = certificate_check(inp)
    payload = {
        "certified": cert.certified,
        "margin": cert.margin,
        "rhs": cert.rhs,
        "rhs_lower": cert.rhs_lower,
        "rhs_upper": cert.rhs_upper,
        "f_bound_ok": cert.f_bound_ok,
        "method": cert.method,
        "m_x": cert.m_x,
        "m_v": cert.m_v,
        "detail": cert.detail,
    }
    if bundle.cs_spec.kernel.name == "power-law":
        p = bundle.cs_spec.kernel.params
        cor = corollary_check(p["K"], p["sigma"], p["beta"], bundle.s,
                              bundle.cs_spec.h, cert.m_x, cert.m_v)
        payload["corollary"] = {
            "certified": cor.certified, "branch": cor.branch,
            "threshold": cor.threshold, "margin": cor.margin,
            "hypothesis_ok": cor.hypothesis_ok,
        }
    text = canonical_json(payload)
    out = _out_dir(args, sc)
    out.mkdir(parents=True, exist_ok=True)
    (out / "certificate.json").write_text(text + "\n")
    print(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "certify":
            return _cmd_certify(args)
        sc = _load(args)
        out = _out_dir(args, sc)
        if args.command == "simulate":
            report = run_scenario(_strip_analyses(sc), out_dir=out, plots=False)
        elif args.command == "analyze":
            report = run_scenario(sc, out_dir=out,
                                  plots=getattr(args, "plots", False))
        else:  # report
            report = run_scenario(sc, out_dir=out, plots=not args.no_plots)
    except (ParseError, ValidationError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except ErgochainError as exc:
        print(f"run error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    _print_summary(report)
    return 2 if report.failed_analyses else 0


def _strip_analyses(sc):
    sc.analyses = ()
    return sc


def _print_summary(report) -> None:
    print(f"scenario: {report.scenario.get('name')} "
          f"(model={report.scenario.get('model')}, "
          f"horizon={report.scenario.get('horizon')})")
    sim = report.simulation
    for key in ("final_spread", "final_velocity_spread", "max_position_diameter"):
        if key in sim:
            print(f"  {key}: {sim[key]}")
    for name, result in report.analyses.items():
        if "error" in result:
            line = f"error: {result['error']}"
        elif "skipped" in result:
            line = f"skipped: {result['skipped']}"
        elif "verdict" in result:
            line = f"verdict: {result['verdict']}"
        elif "predicted" in result:
            line = (f"predicted: {result['predicted']}, "
                    f"observed: {result['observed']['verdict']}, "
                    f"agreement: {result['agreement']}")
        elif "certified" in result:
            line = f"certified: {result['certified']} (margin {result['margin']})"
        elif "verdicts" in result:
            line = ", ".join(f"{k}: {v}" for k, v in result["verdicts"].items())
        elif "islands" in result:
            line = f"islands: {result['islands']}"
        else:
            line = "done"
        print(f"  {name}: {line}")
    if report.artifacts:
        for kind, path in sorted(report.artifacts.items()):
            print(f"  wrote {kind}: {path}")


if __name__ == "__main__":
    raise SystemExit(main())
