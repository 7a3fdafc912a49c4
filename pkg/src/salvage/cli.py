"""``salvage-tool``: run the salvage pipelines on a problem file or a gallery fixture.

Every subcommand prints one JSON report on stdout; ``--out DIR`` also
writes the report and plot-ready CSV tables there.

Exit codes: 0 success, 2 dominance violated, 3 link condition failed or
link invalid, 4 parse/config error, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .adversary import find_sign_flip
from .config import Tolerances
from .dominance import DOMINATED, DominanceReport, refine
from .errors import ConfigError, EvaluationError, InversionError, LinkError, ParseError, QuadratureError
from .link import NOT_INJECTIVE, IMAGE_ESCAPE, check_link, make_link, transform_weights_link, verify_preservation
from .numerics import integrate
from .partition import partition_signs
from .problem import GALLERY_NAMES, gallery_data, problem_from_dict, read_problem_data

EXIT_OK = 0
EXIT_VIOLATED = 2
EXIT_LINK = 3
EXIT_CONFIG = 4
EXIT_NUMERIC = 5

SAMPLE_POINTS = 2048
SAMPLE_COLUMNS = ("x", "omega", "omega_tilde", "g_prime")


def _schedule(text):
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty schedule")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("name", nargs="?", help="gallery fixture name or path to a problem file")
    common.add_argument("--problem", metavar="FILE", help="problem file (JSON)")
    common.add_argument("--bins", type=int, help="bin count for the dominance check")
    common.add_argument("--schedule", type=_schedule, help="bin counts for refinement, e.g. 64,128,256")
    common.add_argument("--quad-tol", type=float, help="absolute quadrature tolerance")
    common.add_argument("--grid", type=int, help="grid points for the pointwise link conditions")
    common.add_argument("--out", metavar="DIR", help="write report.json and CSV tables here")
    common.add_argument("--z", type=float, help="value of the parameter z (gaussian fixture)")
    common.add_argument("--epsilon", type=float, help="floor of the adversarial g' (default 0.01)")
    common.add_argument("--branch", type=int, help="use only this monotone segment of the link")
    common.add_argument("--binning", choices=("equal_measure", "equal_width"), help="value-bin scheme")

    parser = argparse.ArgumentParser(
        prog="salvage-tool",
        description="Check whether a weighted average of marginal effects with negative "
        "weights can be rewritten with nonnegative weights.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="sign partition, estimand and total weight")
    sub.add_parser("link-check", parents=[common], help="link conditions, transformed weights, preservation")
    sub.add_parser("salvage", parents=[common], help="dominance check, binned weights and refinement")
    sub.add_parser("adversary", parents=[common], help="positive g' that makes the estimand negative")
    sub.add_parser("gallery", parents=[common], help=f"run everything on a fixture ({', '.join(GALLERY_NAMES)})")
    return parser


def load_from_args(args):
    if args.problem:
        data = read_problem_data(args.problem)
    elif args.name in GALLERY_NAMES:
        data = gallery_data(args.name)
        data["name"] = args.name
    elif args.name and Path(args.name).exists():
        data = read_problem_data(args.name)
    elif args.name:
        raise ConfigError(f"{args.name!r} is neither a fixture ({', '.join(GALLERY_NAMES)}) nor a file")
    else:
        raise ConfigError("give a fixture name or --problem FILE")
    if not isinstance(data, dict):
        raise ConfigError("a problem file must hold a JSON object")
    if args.z is not None:
        data.setdefault("params", {})["z"] = args.z
    if args.branch is not None:
        data["link_branch"] = args.branch
    if args.epsilon is not None:
        data["epsilon"] = args.epsilon
    if args.binning is not None:
        data["binning"] = args.binning
    spec = problem_from_dict(data)
    overrides = {}
    if args.bins is not None:
        overrides["bins"] = args.bins
    if args.schedule is not None:
        overrides["n_schedule"] = args.schedule
    if args.quad_tol is not None:
        overrides["quad_tol"] = args.quad_tol
    if args.grid is not None:
        overrides["grid_points"] = args.grid
    if overrides:
        try:
            spec.tolerances = dataclasses.replace(spec.tolerances, **overrides)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return spec


# --------------------------------------------------------------------------
# pipelines; each returns (report dict, exit code, csv tables)

def _partition(spec):
    return partition_signs(spec.omega, spec.domain, spec.g_prime)


def _sample_grid(spec):
    return np.linspace(spec.domain.lo, spec.domain.hi, SAMPLE_POINTS)


def _samples(spec, omega_tilde=None, g_prime=None):
    xs = _sample_grid(spec)
    g_prime = g_prime or spec.g_prime
    om, gp = spec.omega(xs), g_prime(xs)
    wt = omega_tilde(xs) if omega_tilde is not None else [None] * len(xs)
    return SAMPLE_COLUMNS, list(zip(xs.tolist(), np.asarray(om).tolist(), list(np.asarray(wt).tolist()), np.asarray(gp).tolist()))


def run_analyze(spec):
    part = _partition(spec)
    tol = spec.tolerances.quad_tol
    b = integrate(lambda x: spec.omega(x) * spec.g_prime(x), spec.domain, tol, spec.omega.breakpoints + spec.g_prime.breakpoints)
    m = integrate(spec.omega, spec.domain, tol, spec.omega.breakpoints)
    report = {
        "partition": part.to_json(),
        "beta_original": b.value,
        "beta_error": b.abs_error_estimate,
        "mass_original": m.value,
        "mass_error": m.abs_error_estimate,
    }
    return report, EXIT_OK, {"samples.csv": _samples(spec)}


def run_link_check(spec):
    if spec.link is None:
        raise ConfigError("the problem has no 'link'")
    part = _partition(spec)
    link = make_link(spec.link, part, branch=spec.link_branch)
    cond = check_link(spec.omega, spec.g_prime, link, part, spec.tolerances, strict=False)
    fatal = [f for f in cond.findings if f.kind in (NOT_INJECTIVE, IMAGE_ESCAPE)]
    report = {
        "partition": part.to_json(),
        "link": {
            "expression": spec.link_text,
            "branch": spec.link_branch,
            "injective": link.injective,
            "segments": [s.to_json() for s in link.segments],
            "image": link.image.to_json(),
            "coverage": link.coverage.to_json(),
        },
        "conditions": cond.to_json(),
        "diagnostics": cond.diagnostics_json(),
        "findings": [f.to_json() for f in cond.findings],
        "omega_tilde": None,
        "preservation": None,
    }
    tables = {}
    if not fatal and cond.verdicts["A1"] == "pass" and cond.verdicts["A2"] == "pass":
        w = transform_weights_link(spec.omega, link, part)
        check = verify_preservation(spec.omega, w, spec.g_prime, spec.domain, part, spec.tolerances.quad_tol)
        report["omega_tilde"] = w.to_json()
        report["preservation"] = check.to_json()
        report["beta_original"] = check.beta_original.value
        report["beta_transformed"] = check.beta_transformed.value
        tables["samples.csv"] = _samples(spec, w)
    code = EXIT_OK if not fatal and cond.all_pass else EXIT_LINK
    return report, code, tables


def _refinement_row(r: DominanceReport):
    return {
        "n": r.bins.requested,
        "bins": r.bins.n,
        "verdict": r.verdict,
        "violated": len(r.violated_bins),
        "preservation_residual": r.preservation_residual,
        "mass_residual": r.mass_residual,
    }


def run_salvage(spec):
    part = _partition(spec)
    tols = spec.tolerances
    counts = sorted(set(tols.n_schedule) | {tols.bins})
    reports = refine(spec.omega, spec.g_prime, part, counts, tols, spec.binning)
    by_n = {r.bins.requested: r for r in reports}
    main = by_n[tols.bins]
    schedule = [by_n[n] for n in tols.n_schedule]
    report = {
        "partition": part.to_json(),
        "dominance": main.to_json(),
        "refinement": [_refinement_row(r) for r in schedule],
    }
    tables = {
        "bins.csv": (DominanceReport.CSV_COLUMNS, list(main.csv_rows())),
        "refinement.csv": (
            ("n", "bins", "verdict", "violated", "preservation_residual", "mass_residual"),
            [tuple(_refinement_row(r).values()) for r in schedule],
        ),
    }
    if main.omega_tilde_n is not None:
        tables["samples.csv"] = _samples(spec, main.omega_tilde_n)
    return report, (EXIT_OK if main.verdict == DOMINATED else EXIT_VIOLATED), tables


def run_adversary(spec):
    part = _partition(spec)
    result = find_sign_flip(spec.omega, part, spec.epsilon, spec.tolerances.quad_tol)
    report = {"partition": part.to_json(), "adversary": result.to_json()}
    tables = {}
    if result.feasible:
        xs = _sample_grid(spec)
        report["g_prime_grid_min"] = float(np.min(result.g_prime(xs)))
        adv_part = partition_signs(spec.omega, spec.domain, result.g_prime)
        dom = refine(spec.omega, result.g_prime, adv_part, [spec.tolerances.bins], spec.tolerances, spec.binning)[0]
        report["dominance_verdict"] = dom.verdict
        tables["samples.csv"] = _samples(spec, g_prime=result.g_prime)
    return report, EXIT_OK, tables


def run_gallery(spec):
    report = {}
    tables = {}
    codes = []
    a, _, t = run_analyze(spec)
    report["analyze"] = a
    tables.update(t)
    report["beta_original"] = a["beta_original"]
    if spec.link is not None:
        lc, code, t = run_link_check(spec)
        report["link_check"] = lc
        codes.append(code)
        tables.update(t)
        if "beta_transformed" in lc:
            report["beta_transformed"] = lc["beta_transformed"]
    sv, code, t = run_salvage(spec)
    report["salvage"] = sv
    codes.append(code)
    tables.update({k: v for k, v in t.items() if k != "samples.csv" or "samples.csv" not in tables})
    if "beta_transformed" not in report and sv["dominance"]["beta_transformed"] is not None:
        report["beta_transformed"] = sv["dominance"]["beta_transformed"]
    adv, _, _ = run_adversary(spec)
    report["adversary"] = adv["adversary"]
    # a failed link outranks a failed dominance check
    code = EXIT_LINK if EXIT_LINK in codes else (EXIT_VIOLATED if EXIT_VIOLATED in codes else EXIT_OK)
    return report, code, tables


COMMANDS = {
    "analyze": run_analyze,
    "link-check": run_link_check,
    "salvage": run_salvage,
    "adversary": run_adversary,
    "gallery": run_gallery,
}


def _write_tables(out_dir, report_text, tables):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_text + "\n")
    for fname, (columns, rows) in tables.items():
        with open(out / fname, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gallery" and (args.problem or args.name not in GALLERY_NAMES):
            raise ConfigError(f"gallery needs a fixture name: {', '.join(GALLERY_NAMES)}")
        spec = load_from_args(args)
        body, code, tables = COMMANDS[args.command](spec)
    except (ConfigError, ParseError) as exc:
        return _fail(exc, EXIT_CONFIG)
    except LinkError as exc:
        return _fail(exc, EXIT_LINK)
    except (QuadratureError, EvaluationError, InversionError, ArithmeticError) as exc:
        return _fail(exc, EXIT_NUMERIC)
    report = {"command": args.command, "problem": spec.to_json(), **body, "exit_code": code}
    text = _dump(report)
    print(text)
    if args.out:
        _write_tables(args.out, text, tables)
    return code


def _fail(exc, code) -> int:
    print(_dump({"error": str(exc), "error_type": type(exc).__name__, "exit_code": code}))
    print(f"salvage-tool: error: {exc}", file=sys.stderr)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
