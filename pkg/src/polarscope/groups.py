"""Assortative group inference with MDL model selection.

The objective is the profile log-likelihood of a directed, degree-agnostic
planted-partition model on the retweet multigraph, minus a description-length
penalty::

    Q = m_in ln(m_in / T_in) + m_out ln(m_out / T_out)
        - [ n ln B + ln C(n-1, B-1) + k ln(m + 1) ]

with ``T_in = sum_r n_r (n_r - 1)`` ordered within-group pairs,
``T_out = n (n - 1) - T_in`` and ``k`` free rates (2 when ``B >= 2``, else 1).

Search: greedy agglomeration from singletons (best pair merge under Q each
step) followed by first-improvement single-node moves.  Each restart relabels
the nodes with a seeded permutation, which changes how exact ties in the
agglomeration are broken and the order in which nodes are visited.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .graphs import EndorsementGraph, SeedAccount
from .rng import CounterRNG

OBJECTIVE_VERSION = "ppm-mdl-v1"
SEARCH_VERSION = "agglomerate-moves-spectral-split-v1"
BLOC_DISPLAY = {
    "ConservativeRight": "Conservative Right",
    "LiberalLeft": "Liberal Left",
    "ModerateRight": "Moderate Right",
    "Minor": "Minor",
}
MINOR_BLOC = "Minor"
_MAX_SWEEPS = 200
_MAX_REFINE_ROUNDS = 3


class InferenceError(ValueError):
    pass


class LabelTieWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Partition:
    assignment: Mapping[str, int]
    B: int
    labels: Mapping[int, str] | None = None
    score: float = float("nan")

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be >= 1")
        used = set(self.assignment.values())
        if any(not (0 <= g < self.B) for g in used):
            raise ValueError("group index outside [0, B)")
        if self.B > 1 and len(used) != self.B:
            raise ValueError("every group must have at least one member")
        if self.labels is not None:
            names = [self.labels[g] for g in range(self.B)]
            if len(set(names)) != len(names):
                raise ValueError("group labels must be unique")

    def group_name(self, g: int) -> str:
        if self.labels is not None:
            return self.labels[g]
        return str(g)

    @property
    def group_names(self) -> list[str]:
        return [self.group_name(g) for g in range(self.B)]

    def members(self, g: int) -> list[str]:
        return sorted(u for u, x in self.assignment.items() if x == g)

    def sizes(self) -> list[int]:
        counts = [0] * self.B
        for g in self.assignment.values():
            counts[g] += 1
        return counts

    def restricted(self, users: Iterable[str]) -> dict[str, int]:
        return {u: self.assignment[u] for u in users if u in self.assignment}

    def relabeled(self, labels: Mapping[int, str]) -> "Partition":
        return replace(self, labels=dict(labels))


@dataclass(frozen=True)
class ModelSelectionResult:
    per_B: dict[int, tuple[Partition, float]]
    chosen_B: int
    evidence_margin: float

    @property
    def partition(self) -> Partition:
        return self.per_B[self.chosen_B][0]


# -- objective ------------------------------------------------------------------

def _term(m: float, t: float) -> float:
    if m <= 0:
        return 0.0
    if t <= 0:
        return -math.inf
    return m * math.log(m / t)


def q_fit(m_in: float, m_total: float, t_in: float, t_total: float) -> float:
    return _term(m_in, t_in) + _term(m_total - m_in, t_total - t_in)


def mdl_penalty(n: int, B: int, m: float) -> float:
    rates = 2 if B >= 2 else 1
    log_binom = math.lgamma(n) - math.lgamma(B) - math.lgamma(n - B + 1) if n >= 1 else 0.0
    return n * math.log(B) + log_binom + rates * math.log(m + 1)


def _vec_terms(m: np.ndarray, t: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = m * np.log(m / t)
    return np.where(m > 0, out, 0.0)


def partition_score(graph: EndorsementGraph, partition: Partition | Mapping[str, int], B: int | None = None) -> float:
    """Penalized Q of a partition covering every node of ``graph``."""
    assignment = partition.assignment if isinstance(partition, Partition) else partition
    if B is None:
        B = partition.B if isinstance(partition, Partition) else len(set(assignment.values())) or 1
    missing = [u for u in graph.nodes if u not in assignment]
    if missing:
        raise InferenceError(f"{len(missing)} graph nodes are not assigned")
    n = len(graph.nodes)
    m_total = float(graph.event_count)
    m_in = float(sum(m for (a, b), m in graph.edges.items() if assignment[a] == assignment[b]))
    sizes: dict[int, int] = {}
    for u in graph.nodes:
        g = assignment[u]
        sizes[g] = sizes.get(g, 0) + 1
    t_in = float(sum(s * (s - 1) for s in sizes.values()))
    t_total = float(n * (n - 1))
    return q_fit(m_in, m_total, t_in, t_total) - mdl_penalty(n, B, m_total)


# -- search internals ---------------------------------------------------------------

@dataclass
class _Prepared:
    nodes: list[str]
    n: int
    m_total: float
    t_total: float
    pair_a: np.ndarray  # undirected pairs a < b (node index space)
    pair_b: np.ndarray
    pair_w: np.ndarray  # combined multiplicity of a->b and b->a
    neighbors: list[list[tuple[int, float]]] = field(default_factory=list)


def _prepare(graph: EndorsementGraph) -> _Prepared:
    nodes = sorted(graph.nodes)
    index = {u: i for i, u in enumerate(nodes)}
    combined: dict[tuple[int, int], float] = {}
    for (u, v), m in graph.edges.items():
        i, j = index[u], index[v]
        key = (i, j) if i < j else (j, i)
        combined[key] = combined.get(key, 0.0) + m
    keys = sorted(combined)
    pa = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
    pb = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
    pw = np.fromiter((combined[k] for k in keys), dtype=np.float64, count=len(keys))
    neighbors: list[list[tuple[int, float]]] = [[] for _ in nodes]
    for (i, j), w in zip(keys, pw.tolist()):
        neighbors[i].append((j, w))
        neighbors[j].append((i, w))
    n = len(nodes)
    return _Prepared(nodes, n, float(graph.event_count), float(n * (n - 1)), pa, pb, pw, neighbors)


def _agglomerate(n: int, pa: np.ndarray, pb: np.ndarray, pw: np.ndarray, m_total: float,
                 t_total: float, targets: set[int], m0: float = 0.0, t0: float = 0.0) -> dict[int, np.ndarray]:
    """Greedy best-merge agglomeration; returns group labels at each target count.

    Works in whatever index space the pairs are given in; exact ties are
    resolved by the smallest (lower, higher) group index pair.  ``m0``/``t0``
    are within-group edges and pair slots contributed by groups outside the
    nodes being agglomerated (used when re-splitting one group in place).
    """
    lab = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    a, b, e = pa.copy(), pb.copy(), pw.copy()
    m_in = m0
    t_in = t0
    snaps: dict[int, np.ndarray] = {}
    g = n
    if g in targets:
        snaps[g] = lab.copy()
    lowest = min(targets)
    while g > lowest:
        active = np.flatnonzero(size > 0)
        two = active[np.lexsort((active, size[active]))[:2]]
        s0, s1 = int(min(two)), int(max(two))
        if not np.any((a == s0) & (b == s1)):
            ca = np.append(a, s0)
            cb = np.append(b, s1)
            ce = np.append(e, 0.0)
        else:
            ca, cb, ce = a, b, e
        p = (size[ca] * size[cb]).astype(np.float64)
        mi = m_in + ce
        ti = t_in + 2.0 * p
        dq = _vec_terms(mi, ti) + _vec_terms(m_total - mi, t_total - ti)
        best = dq.max()
        ties = np.flatnonzero(dq == best)
        if len(ties) > 1:
            pick = ties[np.lexsort((cb[ties], ca[ties]))[0]]
        else:
            pick = ties[0]
        r, s = int(ca[pick]), int(cb[pick])
        m_in += float(ce[pick])
        t_in += 2.0 * float(p[pick])
        size[r] += size[s]
        size[s] = 0
        lab[lab == s] = r
        touch = (a == r) | (b == r) | (a == s) | (b == s)
        if touch.any():
            ta, tb, te = a[touch], b[touch], e[touch]
            other = np.where((ta == r) | (ta == s), tb, ta)
            sel = (other != r) & (other != s)
            other, te = other[sel], te[sel]
            keep = ~touch
            if len(other):
                uo, inv = np.unique(other, return_inverse=True)
                esum = np.bincount(inv, weights=te)
                a = np.concatenate([a[keep], np.minimum(uo, r)])
                b = np.concatenate([b[keep], np.maximum(uo, r)])
                e = np.concatenate([e[keep], esum])
            else:
                a, b, e = a[keep], b[keep], e[keep]
        g -= 1
        if g in targets:
            snaps[g] = lab.copy()
    return snaps


def _compact(lab: np.ndarray) -> tuple[list[int], int]:
    _, inv = np.unique(lab, return_inverse=True)
    return inv.astype(np.int64).tolist(), int(inv.max()) + 1 if len(inv) else 0


def _local_moves(labels: list[int], k: int, prep: _Prepared, order: Sequence[int]) -> list[int]:
    labels = list(labels)
    sizes = [0] * k
    for g in labels:
        sizes[g] += 1
    m_in = 0.0
    for i, j, w in zip(prep.pair_a.tolist(), prep.pair_b.tolist(), prep.pair_w.tolist()):
        if labels[i] == labels[j]:
            m_in += w
    t_in = float(sum(s * (s - 1) for s in sizes))
    M, T = prep.m_total, prep.t_total
    neighbors = prep.neighbors
    for _ in range(_MAX_SWEEPS):
        moved = False
        for i in order:
            a = labels[i]
            if sizes[a] == 1:
                continue
            kk = [0.0] * k
            for j, w in neighbors[i]:
                kk[labels[j]] += w
            base = q_fit(m_in, M, t_in, T)
            tol = 1e-10 * max(1.0, abs(base))
            best_gain, best_b = tol, -1
            for bgrp in range(k):
                if bgrp == a:
                    continue
                dm = kk[bgrp] - kk[a]
                dt = 2.0 * (sizes[bgrp] - sizes[a] + 1)
                gain = q_fit(m_in + dm, M, t_in + dt, T) - base
                if gain > best_gain:
                    best_gain, best_b = gain, bgrp
            if best_b >= 0:
                m_in += kk[best_b] - kk[a]
                t_in += 2.0 * (sizes[best_b] - sizes[a] + 1)
                sizes[a] -= 1
                sizes[best_b] += 1
                labels[i] = best_b
                moved = True
        if not moved:
            break
    return labels


def _canonical_assignment(nodes: list[str], labels: Sequence[int], k: int) -> dict[str, int]:
    members: dict[int, list[str]] = {}
    for u, g in zip(nodes, labels):
        members.setdefault(g, []).append(u)
    # nodes are sorted, so members[g][0] is the smallest id of group g
    order = sorted(members, key=lambda g: (-len(members[g]), members[g][0]))
    remap = {g: i for i, g in enumerate(order)}
    return {u: remap[g] for u, g in zip(nodes, labels)}


def _split_group(labels: np.ndarray, g: int, new: int, prep: _Prepared, rng: CounterRNG) -> np.ndarray | None:
    """Spectral bisection of group ``g``; the new half gets label ``new``.

    Splits on the sign of the second leading eigenvector of the normalized
    within-group adjacency, so low-degree nodes are placed along with the
    rest rather than left over as singletons.
    """
    members = np.flatnonzero(labels == g)
    k = len(members)
    if k < 2:
        return None
    inside = (labels[prep.pair_a] == g) & (labels[prep.pair_b] == g)
    loc = np.full(prep.n, -1, dtype=np.int64)
    loc[members] = np.arange(k)
    ia, ib, w = loc[prep.pair_a[inside]], loc[prep.pair_b[inside]], prep.pair_w[inside]
    adj = sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([ia, ib]), np.concatenate([ib, ia]))),
                            shape=(k, k)).tocsr()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    inv = 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0))
    norm = sparse.diags(inv) @ adj @ sparse.diags(inv)
    if k <= 64:
        vals, vecs = np.linalg.eigh(norm.toarray())
    else:
        v0 = rng.random(k) + 0.5
        vals, vecs = eigsh(norm, k=2, which="LA", v0=v0, tol=1e-8, maxiter=20 * k)
    order = np.argsort(vals)[::-1]
    fiedler = vecs[:, order[1]] * inv
    side = fiedler > np.median(fiedler) if np.all(fiedler >= 0) or np.all(fiedler <= 0) else fiedler > 0
    if side.all() or not side.any():
        return None
    out = labels.copy()
    out[members[side]] = new
    return out


def _search(graph: EndorsementGraph, Bs: Sequence[int], seed: int, restarts: int) -> dict[int, Partition]:
    Bs = sorted(set(Bs))
    if any(B < 1 for B in Bs):
        raise InferenceError("B must be >= 1")
    n = len(graph.nodes)
    out: dict[int, Partition] = {}
    if 1 in Bs:
        assignment = {u: 0 for u in graph.nodes}
        out[1] = Partition(assignment, 1, score=partition_score(graph, assignment, 1) if n else 0.0)
    wanted = [B for B in Bs if B >= 2]
    if not wanted:
        return out
    if graph.is_empty:
        raise InferenceError("cannot search for B >= 2 groups in an empty graph")
    too_big = [B for B in wanted if B > n]
    if too_big:
        raise InferenceError(f"B={too_big[0]} exceeds the node count {n}")
    # every B from 2 up is searched so larger fits can be seeded by splitting smaller ones
    search_Bs = list(range(2, max(wanted) + 1))
    restarts = max(1, int(restarts))
    prep = _prepare(graph)
    best: dict[int, tuple[float, tuple[int, ...], dict[str, int]]] = {}

    def consider(B: int, labels: Sequence[int]) -> bool:
        labels = _local_moves(list(labels), B, prep, order_for(B))
        if len(set(labels)) != B:
            return False
        assignment = _canonical_assignment(prep.nodes, labels, B)
        score = partition_score(graph, assignment, B)
        key = tuple(assignment[u] for u in prep.nodes)
        cur = best.get(B)
        if cur is None or score > cur[0] or (score == cur[0] and key < cur[1]):
            best[B] = (score, key, assignment)
            return cur is None or score > cur[0]
        return False

    orders: dict[int, list[int]] = {}

    def order_for(B: int, r: int = 0) -> list[int]:
        k = r * 64 + B
        if k not in orders:
            orders[k] = CounterRNG(seed, stream=(1 << 32) + k).permutation(n).tolist()
        return orders[k]

    for r in range(restarts):
        rng = CounterRNG(seed, stream=r)
        rank = rng.permutation(n)  # node index -> rank used for tie-breaking
        ra, rb = rank[prep.pair_a], rank[prep.pair_b]
        snaps = _agglomerate(n, np.minimum(ra, rb), np.maximum(ra, rb), prep.pair_w,
                             prep.m_total, prep.t_total, set(search_Bs))
        for B in search_Bs:
            labels, k = _compact(snaps[B][rank])
            labels = _local_moves(labels, k, prep, order_for(B, r))
            assignment = _canonical_assignment(prep.nodes, labels, k)
            score = partition_score(graph, assignment, B)
            key = tuple(assignment[u] for u in prep.nodes)
            cur = best.get(B)
            if cur is None or score > cur[0] or (score == cur[0] and key < cur[1]):
                best[B] = (score, key, assignment)

    # refinement: bisect groups of the (B-1) fit, then merge-and-resplit pairs of the B fit
    split_rng = CounterRNG(seed, stream=(1 << 33))
    for B in search_Bs:
        if B >= 3:
            prev = np.array(best[B - 1][1], dtype=np.int64)
            for g in range(B - 1):
                cand = _split_group(prev, g, B - 1, prep, split_rng)
                if cand is not None:
                    consider(B, cand.tolist())
        for _ in range(_MAX_REFINE_ROUNDS):
            improved = False
            cur = np.array(best[B][1], dtype=np.int64)
            for g in range(B):
                for h in range(g + 1, B):
                    merged = cur.copy()
                    merged[merged == h] = g
                    merged[merged == B - 1] = h  # keep labels contiguous
                    gm = h if g == B - 1 else g
                    cand = _split_group(merged, gm, B - 1, prep, split_rng)
                    if cand is not None and consider(B, cand.tolist()):
                        improved = True
            if not improved:
                break
    for B in wanted:
        score, _, assignment = best[B]
        out[B] = Partition(assignment, B, score=score)
    return out


# -- public operations ----------------------------------------------------------------

def infer_partition(graph: EndorsementGraph, B: int, seed: int = 0, restarts: int = 4) -> Partition:
    """Best partition into exactly ``B`` groups over ``restarts`` seeded runs."""
    return _search(graph, [B], seed, restarts)[B]


def select_model(graph: EndorsementGraph, B_max: int = 3, seed: int = 0, restarts: int = 4) -> ModelSelectionResult:
    """Choose B in 1..B_max by penalized score.

    Values of B above the node count cannot be fitted and are left out of
    ``per_B``; an empty graph therefore yields only B = 1.
    """
    if B_max < 1:
        raise InferenceError("B_max must be >= 1")
    n = len(graph.nodes)
    Bs = [B for B in range(1, B_max + 1) if B == 1 or (B <= n and not graph.is_empty)]
    fits = _search(graph, Bs, seed, restarts)
    per_B = {B: (p, p.score) for B, p in fits.items()}
    ranked = sorted(per_B, key=lambda B: (-per_B[B][1], B))
    chosen = ranked[0]
    margin = per_B[chosen][1] - per_B[ranked[1]][1] if len(ranked) > 1 else math.inf
    return ModelSelectionResult(per_B, chosen, margin)


@dataclass(frozen=True)
class ReferenceFit:
    institutional: Partition
    ideological: Partition
    baseline_score: float  # B = 1 score on the same graph

    def __iter__(self):
        return iter((self.institutional, self.ideological))

    @property
    def institutional_margin(self) -> float:
        return self.institutional.score - self.baseline_score

    @property
    def ideological_margin(self) -> float:
        return self.ideological.score - self.baseline_score


def fit_reference_partitions(parties_graph: EndorsementGraph, seed: int = 0, restarts: int = 4) -> ReferenceFit:
    """Fixed B = 2 (institutional) and B = 3 (ideological) fits on one aggregated graph."""
    n = len(parties_graph.nodes)
    if n < 6:
        raise InferenceError(f"parties graph has {n} nodes; at least 6 are needed for B = 3")
    fits = _search(parties_graph, [1, 2, 3], seed, restarts)
    return ReferenceFit(fits[2], fits[3], fits[1].score)


def label_groups(partition: Partition, seeds: Iterable[SeedAccount], bloc_map: Mapping[str, str] | None = None,
                 display: Mapping[str, str] = BLOC_DISPLAY) -> Partition:
    """Name each group after the plurality bloc of the seed accounts it contains.

    ``bloc_map`` maps party -> bloc and overrides the seed file's bloc column
    (used for government/opposition labels).  Minor-bloc seeds are ignored,
    groups without counted seeds become ``Unlabeled-<g>``, ties go to the
    lexicographically smallest bloc with a :class:`LabelTieWarning`.  If two
    groups share a winner the one with more such seeds keeps the plain name
    and the other gets a ``#2`` suffix.
    """
    seeds = [s for s in seeds if s.author_id in partition.assignment]
    if not seeds:
        raise InferenceError("no seed account is present in the partition; run unlabeled")
    tallies: list[dict[str, int]] = [{} for _ in range(partition.B)]
    for s in seeds:
        bloc = bloc_map.get(s.party, s.bloc) if bloc_map is not None else s.bloc
        if bloc == MINOR_BLOC:
            continue
        t = tallies[partition.assignment[s.author_id]]
        t[bloc] = t.get(bloc, 0) + 1
    winners: dict[int, tuple[str, int]] = {}
    for g, t in enumerate(tallies):
        if not t:
            continue
        top = max(t.values())
        tied = sorted(b for b, c in t.items() if c == top)
        if len(tied) > 1:
            warnings.warn(f"group {g}: seed tie between {tied}; using {tied[0]!r}", LabelTieWarning, stacklevel=2)
        winners[g] = (tied[0], top)
    labels: dict[int, str] = {}
    taken: dict[str, int] = {}
    for g in sorted(winners, key=lambda g: (-winners[g][1], g)):
        name = display.get(winners[g][0], winners[g][0])
        taken[name] = taken.get(name, 0) + 1
        labels[g] = name if taken[name] == 1 else f"{name} #{taken[name]}"
    for g in range(partition.B):
        labels.setdefault(g, f"Unlabeled-{g}")
    return partition.relabeled(labels)


# -- partition files ------------------------------------------------------------------

def write_partition(partition: Partition, path: str | Path, seed: int | None = None,
                    extra: Mapping[str, object] | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# B={partition.B}\n")
        fh.write(f"# score={partition.score!r}\n")
        fh.write(f"# seed={'' if seed is None else seed}\n")
        fh.write(f"# objective={OBJECTIVE_VERSION}\n")
        for k, v in (extra or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "group_index", "label"])
        for user in sorted(partition.assignment):
            g = partition.assignment[user]
            w.writerow([user, g, partition.labels[g] if partition.labels else ""])


def read_partition(path: str | Path) -> Partition:
    header: dict[str, str] = {}
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            header[k.strip()] = v.strip()
        else:
            body.append(line)
    reader = csv.DictReader(body)
    labels: dict[int, str] = {}
    assignment: dict[str, int] = {}
    for row in reader:
        g = int(row["group_index"])
        assignment[row["user_id"]] = g
        if row.get("label"):
            labels[g] = row["label"]
        rows.append(row)
    B = int(header.get("B", max(assignment.values(), default=0) + 1))
    score = float(header["score"]) if header.get("score") not in (None, "") else float("nan")
    return Partition(assignment, B, labels if len(labels) == B else None, score)
