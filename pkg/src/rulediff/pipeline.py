"""Per-provision analysis: interfaces, covers and pair records for every pair."""

from __future__ import annotations

import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .ecgraph import Matching, parse_matching
from .edgecase import DEFAULT_CAP, EdgeCaseCover, cover_from_dict, enumerate_cover
from .errors import RulediffError
from .formal import Formalization, parse_formalization
from .interface import compile, compute_interface
from .metrics import PairRecord

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairAnalysis:
    pair: tuple[str, str]
    interface: dict | None = None
    cover: EdgeCaseCover | None = None
    record: PairRecord | None = None
    error: str | None = None


class Workspace:
    """``<root>/provisions/<id>/{formalizations,matchings,covers,reports}``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def provision_dir(self, provision_id: str) -> Path:
        return self.root / "provisions" / provision_id

    def provisions(self) -> list[str]:
        base = self.root / "provisions"
        return sorted(p.name for p in base.iterdir() if p.is_dir()) if base.is_dir() else []

    def formalizations(self, provision_id: str) -> list[Formalization]:
        d = self.provision_dir(provision_id) / "formalizations"
        trees = [parse_formalization(p.read_bytes()) for p in sorted(d.glob("*.json"))]
        return sorted(trees, key=lambda f: f.tree_id)

    def matching_path(self, provision_id: str, name: str | None = None) -> Path:
        d = self.provision_dir(provision_id) / "matchings"
        if name:
            p = Path(name)
            return p if p.is_absolute() or p.exists() else d / name
        found = sorted(d.glob("*.json"))
        if len(found) != 1:
            raise RulediffError(
                f"expected exactly one matching in {d}, found {len(found)}; choose one with --matching"
            )
        return found[0]

    def load(self, provision_id: str, matching: str | None = None) -> Matching:
        trees = self.formalizations(provision_id)
        return parse_matching(self.matching_path(provision_id, matching).read_bytes(), trees)

    def covers_dir(self, provision_id: str) -> Path:
        return self.provision_dir(provision_id) / "covers"

    def reports_dir(self, provision_id: str | None = None) -> Path:
        if provision_id is None:
            return self.root / "reports"
        return self.provision_dir(provision_id) / "reports"

    def cover_path(self, provision_id: str, pair: tuple[str, str]) -> Path:
        return self.covers_dir(provision_id) / f"{pair[0]}__{pair[1]}.json"

    def load_cover(self, provision_id: str, pair: tuple[str, str]) -> EdgeCaseCover:
        return cover_from_dict(json.loads(self.cover_path(provision_id, pair).read_text(encoding="utf-8")))


def all_pairs(m: Matching) -> list[tuple[str, str]]:
    return list(itertools.combinations(sorted(m.trees), 2))


def analyze_pair(
    m: Matching, a: str, b: str, cap: int | None = DEFAULT_CAP, max_conflicts: int | None = None
) -> PairAnalysis:
    try:
        iface = compute_interface(m, a, b)
        fa, fb = compile(m.trees[a], iface), compile(m.trees[b], iface)
        cover = enumerate_cover(
            fa,
            fb,
            cap,
            pair=(a, b),
            provision_id=m.provision_id,
            inputs=iface.variables,
            max_conflicts=max_conflicts,
        )
    except RulediffError as exc:
        log.warning("pair %s/%s failed: %s", a, b, exc)
        return PairAnalysis((a, b), error=f"{type(exc).__name__}: {exc}")
    equivalent = cover.complete and not cover.pis
    record = PairRecord(m.provision_id, (a, b), iface.cov_pair, equivalent, cover.count, cover.cap_hit)
    return PairAnalysis((a, b), iface.summary(), cover, record)


def _worker(args):
    m, a, b, cap, max_conflicts = args
    return analyze_pair(m, a, b, cap, max_conflicts)


def analyze_provision(
    m: Matching, cap: int | None = DEFAULT_CAP, jobs: int = 1, max_conflicts: int | None = None
) -> list[PairAnalysis]:
    """Analyze every unordered pair; results come back in sorted pair order for any ``jobs``."""
    tasks = [(m, a, b, cap, max_conflicts) for a, b in all_pairs(m)]
    if jobs <= 1 or len(tasks) <= 1:
        return [_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_worker, tasks))
