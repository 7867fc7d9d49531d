## @file cli.py
## @brief Command-line front end: synthesize, verify, simulate, report.

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .cache import load_synthesis, save_synthesis
from .errors import DioError, InvalidInputError, PipelineError, ScenarioError
from .pipeline import RunReport, Synthesis, report_dir, resolve_rounds, run_pipeline, synthesize, verify
from .scenario import BUNDLED, Scenario, resolve_scenario
from .stability import StabilityCertificate

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_UNSTABLE = 3

METHODS = ("auto", "infnorm", "spectral", "lsr")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="DIO-Observer",
        description="Distributed interval observers: gain synthesis, certificates and simulation.",
    )
    p.add_argument("-v", "--verbose", action="count", default=0, help="More logging (repeat for debug).")
    p.add_argument("-q", "--quiet", action="store_true", help="Only log errors.")
    sub = p.add_subparsers(dest="command", required=True)

    scenario_help = f"Scenario file, or a bundled name ({', '.join(BUNDLED)})."

    s = sub.add_parser("synthesize", help="Design observer gains and run the CPDN initialization.")
    s.add_argument("scenario", help=scenario_help)
    s.add_argument("--cache", help="Write the synthesis to this JSON file.")

    v = sub.add_parser("verify", help="Certify Schur stability of the collective error for d rounds.")
    v.add_argument("scenario", help=scenario_help)
    v.add_argument("--d", type=int, default=None, help="Network rounds per step (default: scenario setting).")
    v.add_argument("--method", choices=METHODS, default="auto", help="Certificate to compute.")
    v.add_argument("--cache", help="Reuse a synthesis written by `synthesize --cache`.")
    v.add_argument("--require-stable", action="store_true", help="Exit with 3 when not certified.")

    r = sub.add_parser("simulate", help="Simulate the plant and the DIO, optionally writing traces.")
    r.add_argument("scenario", help=scenario_help)
    r.add_argument("--d", type=int, default=None, help="Network rounds per step (default: scenario setting).")
    r.add_argument("--seed", type=int, default=None, help="Noise seed (default: scenario seed).")
    r.add_argument("--baseline", action="store_true", help="Also run isolated local observers (d = 0).")
    r.add_argument("--out", help="Directory for dio_trace.csv, local_trace.csv and manifest.json.")
    r.add_argument("--cache", help="Reuse a synthesis written by `synthesize --cache`.")
    r.add_argument("--method", choices=METHODS, default="auto", help="Certificate to compute.")
    r.add_argument("--require-stable", action="store_true", help="Exit with 3 when not certified.")

    rep = sub.add_parser("report", help="Summarize a `simulate --out` directory.")
    rep.add_argument("dir", help="Output directory of a simulate run.")
    return p


def _configure_logging(args) -> None:
    if args.quiet:
        level = logging.ERROR
    elif args.verbose >= 2:
        level = logging.DEBUG
    elif args.verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _synthesis(scenario: Scenario, cache: str | None) -> Synthesis:
    if cache:
        return load_synthesis(cache, scenario)[0]
    return synthesize(scenario)


def _print_certificate(cert: StabilityCertificate) -> None:
    verdict = "stable" if cert.stable else "not certified"
    suffix = "" if cert.converged else " (not converged)"
    print(f"certificate {cert.kind.value} = {cert.value:.6g} ({verdict}){suffix}")
    H = cert.assignment
    for i in range(H.n_agents):
        lower = " ".join(str(int(j)) for j in H.lower_source[i])
        upper = " ".join(str(int(j)) for j in H.upper_source[i])
        print(f"  agent {i}: lower from [{lower}]  upper from [{upper}]")


def cmd_synthesize(args) -> int:
    scenario = resolve_scenario(args.scenario)
    syn = synthesize(scenario)
    for i, g in enumerate(syn.gains):
        norms = " ".join(f"{v:.6g}" for v in g.row_norms)
        print(f"agent {i}: row norms [{norms}]")
    cpdn = syn.cpdn
    if cpdn.success:
        print(f"d* = {cpdn.d_star}  (diameter {cpdn.diameter})")
        for (i, s), agent in sorted(cpdn.stabilizer.items()):
            print(f"  l({i}, {s}) = {agent}  hop {cpdn.hops[(i, s)]}")
    else:
        print(f"CPDN fails: d* = {cpdn.d_star} (diameter {cpdn.diameter})")
    if args.cache:
        save_synthesis(args.cache, scenario, syn)
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = resolve_scenario(args.scenario)
    syn = _synthesis(scenario, args.cache)
    d = resolve_rounds(scenario, syn, args.d)
    cert = verify(scenario, syn, d, args.method)
    print(f"d = {d}")
    _print_certificate(cert)
    if args.require_stable and not cert.stable:
        return EXIT_UNSTABLE
    return EXIT_OK


def _print_report(report: RunReport) -> None:
    print(f"scenario {report.scenario}  d = {report.d}  d* = {report.d_star}")
    print(f"correctness {report.correctness.mean():.6f}")
    if report.decay is not None:
        print(f"decay rate {report.decay.rate:.6g}  (r^2 {report.decay.r_squared:.3f})")
    for i in range(report.final_width.shape[0]):
        widths = " ".join(f"{w:.4g}" for w in report.final_width[i])
        print(f"  agent {i}: final widths [{widths}]")
    if report.diverging.any():
        print(f"diverging framers: {int(report.diverging.sum())}")
    if report.baseline is not None:
        base = report.baseline
        print(f"baseline d = 0: correctness {base.correctness.mean():.6f}, "
              f"diverging framers {int(base.diverging.sum())}")


def cmd_simulate(args) -> int:
    scenario = resolve_scenario(args.scenario)
    syn = load_synthesis(args.cache, scenario)[0] if args.cache else None
    report = run_pipeline(scenario, d=args.d, seed=args.seed, baseline=args.baseline,
                          out_dir=args.out, method=args.method, synthesis=syn)
    _print_report(report)
    if report.certificate is not None:
        _print_certificate(report.certificate)
    if args.require_stable and not (report.certificate and report.certificate.stable):
        return EXIT_UNSTABLE
    return EXIT_OK


def cmd_report(args) -> int:
    print(report_dir(args.dir))
    return EXIT_OK


COMMANDS = {
    "synthesize": cmd_synthesize,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def _is_validation(exc: DioError) -> bool:
    if isinstance(exc, PipelineError):
        exc = exc.cause
    return isinstance(exc, (ScenarioError, InvalidInputError))


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        return COMMANDS[args.command](args)
    except DioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID if _is_validation(exc) else EXIT_ERROR
