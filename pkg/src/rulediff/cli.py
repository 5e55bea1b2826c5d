"""Command-line front end.

Exit codes: 0 success, 1 validation failure or bad input, 2 resource limit
or partial result, 3 transport or gateway configuration problem.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import metrics
from .ecgraph import co_membership, jaccard_n, parse_matching
from .edgecase import DEFAULT_CAP
from .errors import ConfigError, RulediffError, StructureError, TransportError
from .formal import load_json, parse_formalization
from .interface import DEFAULT_COVERAGE_THRESHOLD, compile, compute_interface, interface_rows
from .pipeline import Workspace, all_pairs, analyze_provision
from .satkit.cnf import miter
from .triage import DEFAULT_REP_CAP, representatives_json, select_representatives

log = logging.getLogger("rulediff")

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL, EXIT_TRANSPORT = 0, 1, 2, 3


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# -- validate -----------------------------------------------------------------

def _json_files(paths):
    for p in map(Path, paths):
        if p.is_dir():
            yield from sorted(p.rglob("*.json"))
        else:
            yield p


def _formalizations_near(path: Path):
    d = path.parent.parent / "formalizations"
    return [parse_formalization(p.read_bytes()) for p in sorted(d.glob("*.json"))] if d.is_dir() else []


def cmd_validate(args) -> int:
    files = list(_json_files(args.paths))
    if not files:
        print("warning: no JSON documents found", file=sys.stderr)
        return EXIT_OK
    bad = 0
    for path in files:
        try:
            data = path.read_bytes()
            doc = load_json(data)
            if isinstance(doc, dict) and "classes" in doc:
                parse_matching(doc, _formalizations_near(path))
            else:
                parse_formalization(data)
        except StructureError as exc:
            bad += 1
            for v in exc.violations:
                print(f"{path}: {v}")
        except RulediffError as exc:
            bad += 1
            print(f"{path}: {type(exc).__name__}: {exc}")
        else:
            print(f"{path}: ok")
    return EXIT_INVALID if bad else EXIT_OK


# -- analyze ------------------------------------------------------------------

def cmd_analyze(args) -> int:
    ws = Workspace(args.root)
    m = ws.load(args.provision, args.matching)
    results = analyze_provision(m, cap=args.cap, jobs=args.jobs, max_conflicts=args.max_conflicts)
    reports = ws.reports_dir(args.provision)
    records, summaries, failures = [], [], []
    for r in results:
        if r.error:
            failures.append({"pair": list(r.pair), "error": r.error})
            continue
        _write(ws.cover_path(args.provision, r.pair), r.cover.to_json())
        records.append(r.record)
        summaries.append(r.interface)
    _write(reports / "pairs.csv", metrics.records_csv(records))
    _write(reports / "pairs.json", metrics.records_json(records))
    _write(reports / "interfaces.json", _json(summaries))
    _write(reports / "failures.json", _json(failures))
    _write(reports / "summary.json", _json(metrics.summary(records, threshold=args.coverage_threshold)))
    n_eq = sum(r.equivalent for r in records)
    print(f"{args.provision}: {len(records)} pairs analyzed, {n_eq} equivalent, {len(failures)} failed")
    return EXIT_PARTIAL if failures else EXIT_OK


# -- triage -------------------------------------------------------------------

def cmd_triage(args) -> int:
    ws = Workspace(args.root)
    m = ws.load(args.provision, args.matching)
    analyses = []
    missing = []
    for a, b in all_pairs(m):
        if not ws.cover_path(args.provision, (a, b)).exists():
            missing.append(f"{a}__{b}")
            continue
        analyses.append((compute_interface(m, a, b), ws.load_cover(args.provision, (a, b))))
    if missing and not analyses:
        print(f"no covers found for {args.provision}; run `rulediff analyze` first", file=sys.stderr)
        return EXIT_INVALID
    if missing:
        print(f"warning: {len(missing)} pairs have no cover and are skipped", file=sys.stderr)
    reps = select_representatives(analyses, cap=args.rep_cap, cov_threshold=args.coverage_threshold)
    _write(ws.reports_dir(args.provision) / "representatives.json", representatives_json(args.provision, reps, m))
    print(f"{args.provision}: {len(reps)} representative edge cases")
    return EXIT_PARTIAL if missing else EXIT_OK


# -- consistency --------------------------------------------------------------

def cmd_consistency(args) -> int:
    runs_dir = Path(args.runs)
    fdir = Path(args.formalizations) if args.formalizations else runs_dir.parent / "formalizations"
    trees = [parse_formalization(p.read_bytes()) for p in sorted(fdir.glob("*.json"))]
    runs = sorted(runs_dir.glob("*.json"))
    valid, flags = [], []
    for p in runs:
        try:
            valid.append(co_membership(parse_matching(p.read_bytes(), trees)))
            flags.append({"run": p.name, "valid": True})
        except RulediffError as exc:
            flags.append({"run": p.name, "valid": False, "error": f"{type(exc).__name__}: {exc}"})
    jn = jaccard_n(valid) if len(valid) >= 2 else None
    report = {"runs": len(runs), "valid_runs": len(valid), "j_n": jn, "per_run": flags}
    text = _json(report)
    if args.out:
        _write(Path(args.out), text)
    print(text, end="")
    print(f"J_{len(valid)} = {'undefined' if jn is None else f'{jn:.4f}'} ({len(valid)}/{len(runs)} valid)")
    return EXIT_OK


# -- verbalize ----------------------------------------------------------------

def cmd_verbalize(args) -> int:
    from .gateway import Gateway, load_config, verbalize

    if args.offline:
        print("verbalize needs a model endpoint and cannot run with --offline", file=sys.stderr)
        return EXIT_TRANSPORT
    if not args.config:
        print("verbalize needs --config with the gateway endpoint", file=sys.stderr)
        return EXIT_TRANSPORT
    try:
        config = load_config(args.config)
        config.token()
    except ConfigError as exc:
        print(f"gateway configuration error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    ws = Workspace(args.root)
    pdir = ws.provision_dir(args.provision)
    law = next((p for p in (pdir / "provision.txt", pdir / "provision.md") if p.exists()), None)
    law_text = law.read_text(encoding="utf-8") if law else ""
    m = ws.load(args.provision, args.matching)
    analyses = [
        (compute_interface(m, a, b), ws.load_cover(args.provision, (a, b)))
        for a, b in all_pairs(m)
        if ws.cover_path(args.provision, (a, b)).exists()
    ]
    reps = select_representatives(analyses, cap=args.rep_cap, cov_threshold=args.coverage_threshold)
    out, failed = [], 0
    with Gateway(config) as gw:
        for rep in reps:
            iface = compute_interface(m, *rep.pair)
            try:
                out.append(verbalize(gw, rep, law_text, iface).to_dict())
            except (TransportError, RulediffError) as exc:
                failed += 1
                out.append({"pair": list(rep.pair), "signature": rep.signature.digest, "error": str(exc)})
    _write(ws.reports_dir(args.provision) / "verbalizations.json", _json(out))
    print(f"{args.provision}: {len(reps) - failed}/{len(reps)} representatives verbalized")
    return EXIT_PARTIAL if failed else EXIT_OK


# -- report -------------------------------------------------------------------

def cmd_report(args) -> int:
    ws = Workspace(args.root)
    provisions = args.provisions or ws.provisions()
    records = []
    for pid in provisions:
        path = ws.reports_dir(pid) / "pairs.json"
        if not path.exists():
            print(f"no pair records for {pid}; run `rulediff analyze` first", file=sys.stderr)
            return EXIT_INVALID
        records.extend(metrics.record_from_row(r) for r in json.loads(path.read_text(encoding="utf-8")))
    out = ws.reports_dir()
    _write(out / "pairs.csv", metrics.records_csv(records))
    _write(out / "pairs.json", metrics.records_json(records))
    _write(out / "summary.json", _json(metrics.summary(records, threshold=args.coverage_threshold)))
    print(f"{len(records)} pair records across {len(provisions)} provisions")
    return EXIT_OK


# -- dimacs -------------------------------------------------------------------

def cmd_dimacs(args) -> int:
    m = Workspace(args.root).load(args.provision, args.matching)
    iface = compute_interface(m, args.tree_a, args.tree_b)
    fa, fb = compile(m.trees[args.tree_a], iface), compile(m.trees[args.tree_b], iface)
    print(miter(fa, fb, inputs=iface.variables).to_dimacs(), end="")
    print(interface_rows([iface]), end="", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rulediff", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def provision_cmd(name, fn, help):
        s = sub.add_parser(name, help=help)
        s.add_argument("root", help="workspace root")
        s.add_argument("provision")
        s.add_argument("--matching", help="matching file (default: the only file in matchings/)")
        s.add_argument("--coverage-threshold", type=float, default=DEFAULT_COVERAGE_THRESHOLD)
        s.set_defaults(fn=fn)
        return s

    s = sub.add_parser("validate", help="check formalization and matching documents")
    s.add_argument("paths", nargs="*", default=[])
    s.set_defaults(fn=cmd_validate)

    s = provision_cmd("analyze", cmd_analyze, "interfaces, equivalence and edge-case covers for all pairs")
    s.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum prime implicants per pair")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--max-conflicts", type=int, default=None, help="per-call SAT conflict budget")

    s = provision_cmd("triage", cmd_triage, "select representative edge cases")
    s.add_argument("--rep-cap", "--cap", dest="rep_cap", type=int, default=DEFAULT_REP_CAP)

    s = sub.add_parser("consistency", help="N-set Jaccard over repeated matching runs")
    s.add_argument("runs", help="directory of matching runs")
    s.add_argument("--formalizations", help="directory of formalizations (default: ../formalizations)")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_consistency)

    s = provision_cmd("verbalize", cmd_verbalize, "turn representatives into scenarios via the gateway")
    s.add_argument("--config")
    s.add_argument("--offline", action="store_true")
    s.add_argument("--rep-cap", type=int, default=DEFAULT_REP_CAP)

    s = sub.add_parser("report", help="aggregate pair records across provisions")
    s.add_argument("root")
    s.add_argument("provisions", nargs="*")
    s.add_argument("--coverage-threshold", type=float, default=DEFAULT_COVERAGE_THRESHOLD)
    s.set_defaults(fn=cmd_report)

    s = provision_cmd("dimacs", cmd_dimacs, "print the disagreement CNF of one pair")
    s.add_argument("tree_a")
    s.add_argument("tree_b")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except StructureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except RulediffError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
