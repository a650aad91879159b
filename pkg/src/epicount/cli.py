"""Command line front end.

Subcommands: simulate, moments, epi-product, check-measure, verify.

Exit codes: 0 success, 1 usage or config problem, 2 scope (the request is
outside what the implementation decides), 3 capacity (exact enumeration
past its size caps), 4 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .abgroups import AbelianGroupsInstance, parse_abgroup
from .bounds import theoretical_bound_2
from .config import load_config
from .core import epi_product, level_measure_v_table, ones_measure
from .errors import CapacityError, ConfigError, EpicountError, ScopeError
from .harness import build_report, report_csv, report_json
from .orderings import moment_integral, parse_ordering
from .subsets import SubsetsInstance, parse_finset, parse_r_preset, subsets_measure


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is the scope-error slot here,
    # so route usage problems to exit code 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _instance_components(instance: str, measure: str):
    """(instance, measure) pair for ad hoc subcommands, mirroring the
    harness construction rules."""
    if instance == "subsets":
        inst = SubsetsInstance()
        return inst, subsets_measure(parse_r_preset(measure))
    if instance == "abgroups":
        if measure.strip() != "ones":
            raise ConfigError(
                f"abgroups commands support the measure 'ones', got {measure!r}"
            )
        return AbelianGroupsInstance(), ones_measure()
    raise ConfigError(f"unknown instance {instance!r}")


def _render_object(instance_tag: str, obj) -> str:
    if instance_tag == "abgroups":
        return obj.invariant_factor_name()
    return str(obj)


def _parse_handle(instance_tag: str, text: str):
    if instance_tag == "abgroups":
        return parse_abgroup(text)
    return parse_finset(text)


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.threads is not None:
        config = dataclasses.replace(config, threads=args.threads)
    if args.seed_override is not None:
        config = dataclasses.replace(config, seed=args.seed_override)
    report = build_report(config)
    out_dir = Path(args.out)
    os.makedirs(out_dir, exist_ok=True)
    stem = Path(args.config).stem
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    csv_path.write_text(report_csv(report), encoding="utf-8")
    json_path.write_text(report_json(report), encoding="utf-8")
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    print(f"classification: {report.classification.label}")
    if report.truncation_note:
        print(f"note: {report.truncation_note}")
    return 0


def cmd_moments(args) -> int:
    inst, measure = _instance_components(args.instance, args.measure)
    parsed = parse_ordering(args.ordering, inst)
    f = parsed.ordering
    try:
        ns = [int(p) for p in args.n.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad n list {args.n!r}") from None
    if not ns:
        raise ConfigError("empty n list")
    for n in ns:
        moment = float(moment_integral(f, n, measure))
        abs_moment = float(moment_integral(f, n, measure, absolute=True))
        bound2 = float(theoretical_bound_2(f, n, measure, inst))
        print(
            f"n={n}  moment={moment:.6f}  abs_moment={abs_moment:.6f}  "
            f"bound_2={bound2:.6f}"
        )
    return 0


def cmd_epi_product(args) -> int:
    # the search compares epi counts only; no measure is involved
    inst = SubsetsInstance() if args.instance == "subsets" else AbelianGroupsInstance()
    g = _parse_handle(inst.tag, args.g)
    h = _parse_handle(inst.tag, args.h)
    result = epi_product(inst, g, h, search_bound=args.bound)
    if result.exists:
        print(_render_object(inst.tag, result.found))
        return 0
    if not result.witnesses:
        print(
            f"not found up to bound {args.bound}; no candidate admits "
            f"epimorphisms onto both operands"
        )
        return 0
    # report the witness with the smallest test object: the cheapest
    # certificate a reader can re-check by hand
    witness = min(
        result.witnesses,
        key=lambda w: (inst.size(w.test_object), str(w.test_object)),
    )
    print(
        f"not found up to bound {args.bound}; witness "
        f"K={_render_object(inst.tag, witness.test_object)} requires "
        f"{witness.required} epi-pair count, observed {witness.actual} on "
        f"candidate {_render_object(inst.tag, witness.candidate)}"
    )
    return 0


def cmd_check_measure(args) -> int:
    inst, measure = _instance_components(args.instance, args.measure)
    raw = args.level.strip()
    if not raw.startswith("{"):
        raw = "{" + raw + "}"
    level = parse_finset(raw)
    poset = inst.level(level)
    table = level_measure_v_table(poset, measure)
    worst = min(table, key=lambda b: table[b])
    print(f"level D={level} with {len(poset)} objects")
    print(f"min v = {table[worst]!r} at B={worst}")
    return 0


def cmd_verify(args) -> int:
    from .acceptance import run_suite

    results = run_suite(args.suite)
    failures = [r for r in results if r.status == "FAIL"]
    if failures:
        for r in failures:
            print(
                f"verification failed: criterion {r.number} ({r.name})",
                file=sys.stderr,
            )
        return 4
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="epicount",
        description="Counting functions of random objects: simulate and verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured experiment")
    p.add_argument("config", help="path to a key=value config file")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--threads", type=int, default=None,
                   help="override the config's worker count")
    p.add_argument("--seed-override", type=int, default=None,
                   help="override the config's seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("moments", help="print moment integrals and bounds")
    p.add_argument("--instance", default="subsets",
                   choices=("subsets", "abgroups"))
    p.add_argument("--measure", default="constant:0.5",
                   help="measure key (subsets presets, or 'ones')")
    p.add_argument("--ordering", required=True,
                   help="ordering spec, e.g. singletons or maximal-subgroups")
    p.add_argument("--n", required=True, help="comma-separated n values")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("epi-product", help="bounded epi-product search")
    p.add_argument("--instance", default="abgroups",
                   choices=("subsets", "abgroups"))
    p.add_argument("--bound", type=int, default=100,
                   help="test-object size bound (default 100)")
    p.add_argument("g", help="first operand, e.g. C2 or {1,2}")
    p.add_argument("h", help="second operand")
    p.set_defaults(func=cmd_epi_product)

    p = sub.add_parser("check-measure",
                       help="evaluate level measures v over a level")
    p.add_argument("--instance", default="subsets",
                   choices=("subsets", "abgroups"))
    p.add_argument("--measure", required=True, help="measure key")
    p.add_argument("--level", required=True,
                   help="level spec: comma-separated elements, e.g. 1,2,3")
    p.set_defaults(func=cmd_check_measure)

    p = sub.add_parser("verify", help="run the built-in verification suite")
    p.add_argument("suite", nargs="?", default="fast", choices=("fast", "full"))
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except ScopeError as exc:
        print(f"scope error: {exc}", file=sys.stderr)
        return 2
    except EpicountError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
