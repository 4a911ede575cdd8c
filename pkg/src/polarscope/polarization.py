"""AEI, reduced mutual information, partisan sorting and cross-topic alignment.

AEI for a pair of groups X, Y works on the sub-multigraph induced by X u Y::

    d_in  = m_in  / (n_X (n_X - 1) + n_Y (n_Y - 1))
    d_out = m_out / (2 n_X n_Y)
    aei   = (d_in - d_out) / (d_in + d_out)

Group sizes are member counts of the partition passed in; callers that want
window-active sizes restrict the partition first (the trends pipeline does).

RMI between partitions A and B over their n common users::

    M(A;B) = n I(A;B) - ln Omega(a, b)
    rmi    = 2 M(A;B) / (M(A;A) + M(B;B))      clamped to [0, 1]
"""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .contingency import log_omega, log_omega_method
from .graphs import EndorsementGraph, Participation, participation
from .groups import ModelSelectionResult, Partition
from .ingest import TimeWindow

DEFAULT_MIN_OVERLAP = 20


def _assignment(p) -> Mapping[str, int]:
    return p.assignment if isinstance(p, Partition) else p


def _group_index(partition: Partition, g) -> int:
    if isinstance(g, (int, np.integer)):
        return int(g)
    if partition.labels is not None:
        for k, name in partition.labels.items():
            if name == g:
                return k
    raise KeyError(f"no group {g!r} in partition")


# -- AEI --------------------------------------------------------------------------

@dataclass(frozen=True)
class PairAEI:
    window: TimeWindow | None
    group_x: str
    group_y: str
    aei: float | None
    m_in: int
    m_out: int


def group_edge_counts(graph: EndorsementGraph, partition: Partition) -> np.ndarray:
    """B x B matrix of edge multiplicity from group r to group s (unassigned endpoints ignored)."""
    a = partition.assignment
    C = np.zeros((partition.B, partition.B), dtype=np.int64)
    for (u, v), m in graph.edges.items():
        gu, gv = a.get(u), a.get(v)
        if gu is not None and gv is not None:
            C[gu, gv] += m
    return C


def aei_from_counts(m_in: int, m_out: int, n_x: int, n_y: int) -> float | None:
    if n_x < 1 or n_y < 1:
        raise ValueError("both groups must be non-empty")
    if m_in + m_out == 0:
        return None
    t_in = n_x * (n_x - 1) + n_y * (n_y - 1)
    d_in = m_in / t_in if t_in > 0 else 0.0
    d_out = m_out / (2 * n_x * n_y)
    if d_out == 0:
        return 1.0 if d_in > 0 else None
    if d_in == 0:
        return -1.0
    return (d_in - d_out) / (d_in + d_out)


def pair_aei(graph: EndorsementGraph, partition: Partition, X, Y, counts: np.ndarray | None = None) -> PairAEI:
    x, y = _group_index(partition, X), _group_index(partition, Y)
    if x == y:
        raise ValueError("X and Y must be different groups")
    sizes = partition.sizes()
    C = group_edge_counts(graph, partition) if counts is None else counts
    m_in = int(C[x, x] + C[y, y])
    m_out = int(C[x, y] + C[y, x])
    value = aei_from_counts(m_in, m_out, sizes[x], sizes[y])
    return PairAEI(graph.window, partition.group_name(x), partition.group_name(y), value, m_in, m_out)


def aei(graph: EndorsementGraph, partition: Partition, X, Y) -> float | None:
    """AEI of groups X and Y (indices or labels); ``None`` when the pair has no edges."""
    return pair_aei(graph, partition, X, Y).aei


# -- RMI --------------------------------------------------------------------------

@dataclass(frozen=True)
class RMIResult:
    value: float | None
    n: int
    mutual_information: float  # M(A;B), nats
    exact: bool  # every log-Omega term was computed exactly


def _table(a: Mapping[str, int], b: Mapping[str, int], users: Iterable[str]):
    cells = Counter((a[u], b[u]) for u in users)
    ra = Counter(a[u] for u in users)
    rb = Counter(b[u] for u in users)
    return cells, ra, rb


def _reduced_mi(cells: Counter, ra: Counter, rb: Counter, n: int) -> tuple[float, bool]:
    log_n = math.log(n)
    terms = [c * (log_n + math.log(c) - math.log(ra[r]) - math.log(rb[s])) for (r, s), c in cells.items()]
    rows, cols = sorted(ra.values()), sorted(rb.values())
    exact = log_omega_method(rows, cols) != "approx"
    return math.fsum(terms) - log_omega(rows, cols), exact


def rmi_detail(partition_a, partition_b, universe: Iterable[str] | None = None) -> RMIResult:
    a, b = _assignment(partition_a), _assignment(partition_b)
    common = set(a).intersection(b)
    if universe is not None:
        common &= set(universe)
    n = len(common)
    if n < 2:
        return RMIResult(None, n, math.nan, True)
    cells, ra, rb = _table(a, b, common)
    if len(ra) == 1 or len(rb) == 1:
        # one side is a single group: no information and exactly one table
        return RMIResult(0.0, n, 0.0, True)
    m_ab, ex_ab = _reduced_mi(cells, ra, rb, n)
    m_aa, ex_aa = _reduced_mi(Counter({(r, r): c for r, c in ra.items()}), ra, ra, n)
    m_bb, ex_bb = _reduced_mi(Counter({(s, s): c for s, c in rb.items()}), rb, rb, n)
    denom = m_aa + m_bb
    exact = ex_ab and ex_aa and ex_bb
    if denom <= 0:
        return RMIResult(0.0, n, m_ab, exact)
    value = min(1.0, max(0.0, 2.0 * m_ab / denom))
    return RMIResult(value, n, m_ab, exact)


def rmi(partition_a, partition_b, universe: Iterable[str] | None = None) -> float | None:
    """Normalized reduced mutual information over common users; ``None`` if fewer than 2."""
    return rmi_detail(partition_a, partition_b, universe).value


# -- partisan sorting -------------------------------------------------------------------

def partisan_sorting_series(weekly_results: Sequence[ModelSelectionResult | None],
                            reference: Partition) -> list[float | None]:
    out = []
    for res in weekly_results:
        if res is None or res.chosen_B == 1:
            out.append(None)
        else:
            out.append(rmi(res.partition, reference))
    return out


@dataclass
class WindowRecord:
    window: TimeWindow
    pairs: list[PairAEI]
    rmi_institutional: float | None
    rmi_ideological: float | None
    participation: Participation
    chosen_B: int | None
    exact: bool = True


@dataclass
class PolarizationSeries:
    topic: str
    records: list[WindowRecord]


def polarization_series(topic: str, graphs: Sequence[EndorsementGraph], institutional: Partition,
                        ideological: Partition, weekly: Sequence[ModelSelectionResult | None]) -> PolarizationSeries:
    """Per-window AEI for every ideological pair, sorting RMI and participation.

    AEI uses the ideological groups restricted to the users active in that
    window, so densities are relative to who actually took part.
    """
    if len(graphs) != len(weekly):
        raise ValueError("one model selection per window is required")
    records = []
    for graph, res in zip(graphs, weekly):
        active = {u: g for u, g in ideological.assignment.items() if u in graph.nodes}
        counts = np.zeros((ideological.B, ideological.B), dtype=np.int64)
        sizes = [0] * ideological.B
        for g in active.values():
            sizes[g] += 1
        for (u, v), m in graph.edges.items():
            if u in active and v in active:
                counts[active[u], active[v]] += m
        pairs = []
        for x, y in combinations(range(ideological.B), 2):
            m_in = int(counts[x, x] + counts[y, y])
            m_out = int(counts[x, y] + counts[y, x])
            value = aei_from_counts(m_in, m_out, sizes[x], sizes[y]) if sizes[x] and sizes[y] else None
            pairs.append(PairAEI(graph.window, ideological.group_name(x), ideological.group_name(y), value, m_in, m_out))
        exact = True
        if res is None or res.chosen_B == 1:
            r_inst = r_ideo = None
        else:
            d_inst = rmi_detail(res.partition, institutional)
            d_ideo = rmi_detail(res.partition, ideological)
            r_inst, r_ideo = d_inst.value, d_ideo.value
            exact = d_inst.exact and d_ideo.exact
        records.append(WindowRecord(graph.window, pairs, r_inst, r_ideo, participation(graph, ideological),
                                    None if res is None else res.chosen_B, exact))
    return PolarizationSeries(topic, records)


# -- alignment --------------------------------------------------------------------------

@dataclass(frozen=True)
class AlignmentEntry:
    topic: str
    week: str
    result: ModelSelectionResult | None


@dataclass(frozen=True)
class AlignmentCell:
    topic_a: str
    week_a: str
    topic_b: str
    week_b: str
    value: float | None
    overlap_n: int
    exact: bool = True

    @property
    def defined(self) -> bool:
        return self.value is not None


def alignment_matrix(entries: Sequence[AlignmentEntry], min_overlap: int = DEFAULT_MIN_OVERLAP) -> list[AlignmentCell]:
    """RMI between weekly partitions for every ordered pair of entries.

    A cell is undefined when either side chose B = 1 (or has no result) or
    fewer than ``min_overlap`` users appear in both.  Only the upper triangle
    is computed; the lower one mirrors it, so the matrix is exactly symmetric.
    """
    k = len(entries)
    upper: dict[tuple[int, int], tuple[float | None, int, bool]] = {}
    for i in range(k):
        for j in range(i, k):
            ri, rj = entries[i].result, entries[j].result
            if ri is None or rj is None:
                upper[i, j] = (None, 0, True)
                continue
            pa, pb = ri.partition.assignment, rj.partition.assignment
            overlap = len(pa.keys() & pb.keys())
            if ri.chosen_B == 1 or rj.chosen_B == 1 or overlap < min_overlap:
                upper[i, j] = (None, overlap, True)
                continue
            if i == j:
                upper[i, j] = (1.0, overlap, True)
                continue
            d = rmi_detail(pa, pb)
            upper[i, j] = (d.value, overlap, d.exact)
    cells = []
    for i in range(k):
        for j in range(k):
            value, overlap, exact = upper[min(i, j), max(i, j)]
            cells.append(AlignmentCell(entries[i].topic, entries[i].week, entries[j].topic, entries[j].week,
                                       value, overlap, exact))
    return cells


# -- CSV writers --------------------------------------------------------------------------

def fmt_real(x: float | None) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def trends_rows(series: PolarizationSeries, group_names: Sequence[str]) -> list[list[str]]:
    rows = []
    for rec in series.records:
        active = [str(rec.participation.counts.get(g, 0)) for g in group_names]
        for p in rec.pairs:
            rows.append([rec.window.label, series.topic, f"{p.group_x}|{p.group_y}", fmt_real(p.aei),
                         str(p.m_in), str(p.m_out), *active, str(rec.participation.nonpartisan_count),
                         fmt_real(rec.participation.nonpartisan_share), fmt_real(rec.rmi_institutional),
                         fmt_real(rec.rmi_ideological), "" if rec.chosen_B is None else str(rec.chosen_B),
                         "1" if rec.exact else "0"])
    return rows


def trends_header(group_names: Sequence[str]) -> list[str]:
    return (["window_start", "topic", "pair", "aei", "m_in", "m_out"]
            + [f"active_{g}" for g in group_names]
            + ["nonpartisan_count", "nonpartisan_share", "rmi_institutional", "rmi_ideological",
               "chosen_B", "exact"])


def write_trends_csv(series_list: Sequence[PolarizationSeries], group_names: Sequence[str],
                     path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trends_header(group_names))
        for s in series_list:
            w.writerows(trends_rows(s, group_names))


def write_alignment_csv(cells: Sequence[AlignmentCell], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["topic_a", "week_a", "topic_b", "week_b", "rmi", "defined", "overlap_n", "exact"])
        for c in cells:
            w.writerow([c.topic_a, c.week_a, c.topic_b, c.week_b, fmt_real(c.value),
                        "1" if c.defined else "0", c.overlap_n, "1" if c.exact else "0"])
