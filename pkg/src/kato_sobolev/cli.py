"""Command-line front end: norms of stored fields, verification suites, report merging.

Exit codes: 0 success, 2 I/O failure, 3 usage or precondition error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import jsonschema

from . import __version__
from .corpus import GENERATOR
from .errors import ConvergenceError, FieldFormatError, IndeterminateError, KatoSobolevError
from .grid import field_read
from .kato import KatoNormSpec, TranslationSet, kato_norm
from .partition import Window, bump_profile, build_partition, tensor_window
from .report import ReportDoc, to_jsonable, validate_report
from .sobolev import h_norm
from .suites import SUITES, SuiteConfig

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_FAIL = 0, 2, 3, 4

WINDOWS = ("bump", "wide-bump", "partition")
MODES = ("lattice", "subgrid")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _blocks(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad block list {text!r}") from None
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"bad block list {text!r}")
    return dims


def _real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kato-sobolev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("norm", help="H^s norm of a stored field")
    p.add_argument("file")
    p.add_argument("--s", type=_real, required=True)

    p = sub.add_parser("kato-norm", help="uniformly local norm of a stored field")
    p.add_argument("file")
    p.add_argument("--s", type=_real, required=True)
    p.add_argument("--p", type=_real, default=2.0, help="exponent in [1, inf]")
    p.add_argument("--window", default="bump", help=f"one of {', '.join(WINDOWS)}")
    p.add_argument("--mode", default="lattice", help=f"one of {', '.join(MODES)}")

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--size", type=int, default=None, help="corpus size")
    p.add_argument("--grid", type=int, default=None, help="samples per axis")
    p.add_argument("--box", type=_real, default=None, help="box length per axis")
    p.add_argument("--blocks", type=_blocks, default=None, help="block dimensions, e.g. 1,1")
    p.add_argument("--quadrature-nodes", type=int, default=64)
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--csv", default=None, help="also write (x, measured, bound) columns here")

    p = sub.add_parser("report-merge", help="concatenate report documents")
    p.add_argument("paths", nargs="+")
    p.add_argument("--out", default=None)
    return parser


def make_window(name: str, grid) -> Window:
    if name == "bump":
        return tensor_window(grid, bump_profile(-0.75, -0.25, 0.25, 0.75), name)
    if name == "wide-bump":
        return tensor_window(grid, bump_profile(-1.5, -0.5, 0.5, 1.5), name)
    if name == "partition":
        return build_partition(grid.n, grid).h
    raise UsageError(f"unknown window {name!r}; choose from {', '.join(WINDOWS)}")


def _subgrid_step(N: int, L: float) -> int:
    """Largest divisor of ``N`` giving a translation spacing of at most 1/8."""
    limit = max(1, int(N / (8 * L)))
    return max(d for d in range(1, limit + 1) if N % d == 0)


def make_translations(mode: str, grid) -> TranslationSet:
    if mode == "lattice":
        return TranslationSet.lattice(grid, 1.0)
    if mode == "subgrid":
        return TranslationSet.subgrid(grid, [_subgrid_step(N, L) for N, L in zip(grid.samples, grid.box)])
    raise UsageError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")


def _read(path):
    try:
        return field_read(path)
    except OSError as exc:
        raise FieldFormatError(f"cannot read {path}: {exc.strerror or exc}") from None


def cmd_norm(args) -> int:
    u = _read(args.file)
    print(f"{h_norm(u, args.s):.12g}")
    return EXIT_OK


def cmd_kato_norm(args) -> int:
    if args.window not in WINDOWS:
        raise UsageError(f"unknown window {args.window!r}; choose from {', '.join(WINDOWS)}")
    if args.mode not in MODES:
        raise UsageError(f"unknown mode {args.mode!r}; choose from {', '.join(MODES)}")
    u = _read(args.file)
    spec = KatoNormSpec(args.s, args.p, make_window(args.window, u.grid), make_translations(args.mode, u.grid))
    print(f"{kato_norm(u, spec):.12g}")
    return EXIT_OK


def _write(path, text: str):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_csv(path, doc: dict):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "measured", "bound"])
        for case in doc["cases"]:
            fmt = lambda v: "" if v is None else repr(float(v))
            writer.writerow([case["name"], fmt(case["measured"]), fmt(case["bound"])])


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    if args.quadrature_nodes < 2:
        raise UsageError("--quadrature-nodes must be at least 2")
    cfg = SuiteConfig(args.seed, args.size, args.grid, args.box, args.blocks, args.quadrature_nodes)
    start = time.perf_counter()
    try:
        params, cases = SUITES[args.suite](cfg)
    except (ConvergenceError, IndeterminateError) as exc:
        print(f"kato-sobolev: suite {args.suite} did not converge: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except KatoSobolevError:
        raise
    except Exception as exc:  # a crashing check is a verification failure, not a usage error
        print(f"kato-sobolev: suite {args.suite} aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    flags = {
        "seed": args.seed,
        "size": args.size,
        "grid": args.grid,
        "box": args.box,
        "blocks": list(args.blocks) if args.blocks else None,
        "quadrature_nodes": args.quadrature_nodes,
    }
    meta = {
        "generator": GENERATOR,
        "seed": args.seed,
        "version": __version__,
        "flags": flags,
        "grid": params.get("grid"),
        "wall_time": round(time.perf_counter() - start, 3),
    }
    report = ReportDoc(args.suite, dict(flags, inputs=params), cases, meta)
    doc = report.to_dict()
    validate_report(doc)
    _write(args.out, report.to_json())
    if args.csv:
        _write_csv(args.csv, doc)
    failed = [c["name"] for c in doc["cases"] if c["status"] != "pass"]
    print(f"{args.suite}: {len(doc['cases']) - len(failed)}/{len(doc['cases'])} cases pass", file=sys.stderr)
    for name in failed:
        print(f"  not passing: {name}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAIL


def merge_reports(docs: list[tuple[str, dict]]) -> dict:
    """Concatenate cases from ``(source, document)`` pairs, tagging each case with its origin."""
    cases = []
    sources = []
    versions = set()
    for source, doc in docs:
        version = doc["meta"].get("version")
        if version is not None:
            versions.add(str(version))
        sources.append({"path": source, "suite": doc["suite"], "params": doc["params"], "version": version})
        for case in doc["cases"]:
            details = dict(case["details"], provenance={"source": source, "suite": doc["suite"]})
            cases.append(dict(case, details=details))
    cases.sort(key=lambda c: (c["name"], c["details"]["provenance"]["source"]))
    meta = {"version": __version__, "merged_versions": sorted(versions), "warnings": []}
    if len(versions) > 1:
        meta["warnings"].append(f"conflicting toolkit versions: {', '.join(sorted(versions))}")
    suites = sorted({d["suite"] for _, d in docs})
    return {"suite": "+".join(suites), "params": {"sources": sources}, "cases": cases, "meta": meta}


def cmd_report_merge(args) -> int:
    docs = []
    for path in args.paths:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        try:
            doc = json.loads(text)
            validate_report(doc)
        except (json.JSONDecodeError, jsonschema.ValidationError) as exc:
            raise UsageError(f"{path}: not a report document ({str(exc).splitlines()[0]})") from None
        docs.append((path, doc))
    merged = to_jsonable(merge_reports(docs))
    validate_report(merged)
    _write(args.out, json.dumps(merged, sort_keys=True, indent=2, allow_nan=False) + "\n")
    return EXIT_OK


COMMANDS = {"norm": cmd_norm, "kato-norm": cmd_kato_norm, "verify": cmd_verify, "report-merge": cmd_report_merge}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FieldFormatError, OSError) as exc:
        print(f"kato-sobolev: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, KatoSobolevError) as exc:
        print(f"kato-sobolev: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
