"""Aggregate statistics over analyzed pairs."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import BadEdges, LengthMismatch

CSV_COLUMNS = ("provision", "pair_a", "pair_b", "coverage", "equivalent", "pi_count", "cap_hit")


@dataclass(frozen=True)
class PairRecord:
    provision: str
    pair: tuple[str, str]
    cov_pair: float
    equivalent: bool
    pi_count: int
    cap_hit: bool = False

    def __post_init__(self):
        if self.equivalent and self.pi_count:
            raise ValueError("an equivalent pair cannot have edge cases")

    def row(self) -> dict:
        return {
            "provision": self.provision,
            "pair_a": self.pair[0],
            "pair_b": self.pair[1],
            "coverage": self.cov_pair,
            "equivalent": self.equivalent,
            "pi_count": self.pi_count,
            "cap_hit": self.cap_hit,
        }


@dataclass(frozen=True)
class Bucket:
    lo: float
    hi: float
    count: int
    equivalent_share: float | None  # None for an empty bucket


def bucket_equivalence(records: Sequence[PairRecord], edges: Sequence[float]) -> list[Bucket]:
    """Equivalent share per coverage bucket; buckets are [lo, hi) except the last, which is closed."""
    edges = list(edges)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise BadEdges(f"edges must be strictly increasing with at least two entries: {edges}")
    if edges[0] != 0.0 or edges[-1] != 1.0:
        raise BadEdges(f"edges must span [0, 1]: {edges}")
    out = []
    last = len(edges) - 2
    for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
        inside = [r for r in records if lo <= r.cov_pair < hi or (k == last and r.cov_pair == hi)]
        eq = sum(r.equivalent for r in inside)
        out.append(Bucket(lo, hi, len(inside), eq / len(inside) if inside else None))
    return out


def model_nonequivalence(records: Iterable[PairRecord], min_coverage: float = 0.0) -> dict[str, float]:
    """Per model, the fraction of its pairs (with coverage >= min_coverage) that are non-equivalent.

    Pairs that hit the enumeration cap count as non-equivalent.
    """
    total: dict[str, int] = {}
    noneq: dict[str, int] = {}
    for r in records:
        if r.cov_pair < min_coverage:
            continue
        for model in set(r.pair):
            total[model] = total.get(model, 0) + 1
            noneq[model] = noneq.get(model, 0) + (not r.equivalent)
    return {m: noneq[m] / total[m] for m in sorted(total)}


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Spearman rank correlation with average ranks for ties; None if either series is constant."""
    if len(xs) != len(ys):
        raise LengthMismatch(f"{len(xs)} != {len(ys)}")
    if len(xs) < 2:
        raise LengthMismatch("need at least two observations")
    rx, ry = rankdata(xs), rankdata(ys)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        return None
    return float(np.corrcoef(rx, ry)[0, 1])


def records_csv(records: Iterable[PairRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def records_json(records: Iterable[PairRecord]) -> str:
    return json.dumps([r.row() for r in records], indent=2, sort_keys=True) + "\n"


def record_from_row(row: dict) -> PairRecord:
    def flag(x):
        return x if isinstance(x, bool) else str(x).lower() == "true"

    return PairRecord(
        row["provision"],
        (row["pair_a"], row["pair_b"]),
        float(row["coverage"]),
        flag(row["equivalent"]),
        int(row["pi_count"]),
        flag(row["cap_hit"]),
    )


def summary(records: Sequence[PairRecord], edges=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0), threshold=0.4) -> dict:
    rho = None
    if len(records) >= 2:
        rho = spearman_rho([r.cov_pair for r in records], [r.pi_count for r in records])
    return {
        "pairs": len(records),
        "buckets": [asdict(b) for b in bucket_equivalence(records, edges)],
        "model_nonequivalence": model_nonequivalence(records, threshold),
        "model_nonequivalence_unfiltered": model_nonequivalence(records),
        "coverage_pi_count_spearman": rho,
    }
