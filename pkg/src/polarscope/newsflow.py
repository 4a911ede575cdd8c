"""User -> news analytics: virality, centrality, sentiment breakdowns, outlet tables."""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .graphs import UserNewsGraph
from .groups import Partition

LIKE_WEIGHT = 30
RETWEET_WEIGHT = 20
REPLY_WEIGHT = 1
NONPARTISAN = "Nonpartisan"
DEFAULT_TOP_OUTLETS = 5


def virality(like_count: int, retweet_count: int, reply_count: int) -> int:
    """30 * likes + 20 * retweets + replies, as an exact Python integer."""
    counts = (like_count, retweet_count, reply_count)
    if any(isinstance(c, bool) or int(c) != c for c in counts):
        raise TypeError("engagement counts must be integers")
    if any(c < 0 for c in counts):
        raise ValueError("engagement counts must be non-negative")
    return LIKE_WEIGHT * int(like_count) + RETWEET_WEIGHT * int(retweet_count) + REPLY_WEIGHT * int(reply_count)


def node_centrality(graph: UserNewsGraph) -> dict[str, dict[str, int]]:
    """Virality-weighted degree, returned as ``{"users": {...}, "articles": {...}}``.

    Every user and article of the graph appears, isolated ones with 0.
    """
    users = {u: 0 for u in sorted(graph.users)}
    articles = {a: 0 for a in sorted(graph.articles)}
    for e in graph.edges:
        users[e.user_id] = users.get(e.user_id, 0) + e.virality
        articles[e.article_key] += e.virality
    return {"users": users, "articles": articles}


def top_viral_news(graph: UserNewsGraph, k: int) -> list[tuple[str, int]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    cent = node_centrality(graph)["articles"]
    ranked = sorted(cent.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


# -- sentiment breakdown ------------------------------------------------------------

@dataclass
class GroupSentiment:
    tweet_count: int = 0
    pos_count: int = 0
    neg_count: int = 0
    neutral_count: int = 0
    virality_total: int = 0
    virality_pos: int = 0
    virality_neg: int = 0
    virality_neutral: int = 0

    def add(self, sentiment: str, v: int) -> None:
        self.tweet_count += 1
        self.virality_total += v
        if sentiment == "positive":
            self.pos_count += 1
            self.virality_pos += v
        elif sentiment == "negative":
            self.neg_count += 1
            self.virality_neg += v
        else:
            self.neutral_count += 1
            self.virality_neutral += v


@dataclass
class SentimentBreakdown:
    article_key: str
    groups: dict[str, GroupSentiment] = field(default_factory=dict)

    def __getitem__(self, group: str) -> GroupSentiment:
        return self.groups[group]

    @property
    def virality_total(self) -> int:
        return sum(g.virality_total for g in self.groups.values())

    @property
    def tweet_count(self) -> int:
        return sum(g.tweet_count for g in self.groups.values())

    def to_dict(self, round_thousands: bool = False) -> dict:
        out = {}
        for name, g in self.groups.items():
            d = dict(vars(g))
            if round_thousands:
                for key in ("virality_total", "virality_pos", "virality_neg", "virality_neutral"):
                    d[key] = round_to_thousands(d[key])
            out[name] = d
        return {"article_key": self.article_key, "groups": out}


def round_to_thousands(value: int) -> int:
    """Presentation rounding (half up) to whole thousands, e.g. 77_600 -> 78."""
    return (int(value) + 500) // 1000


def group_sentiment_breakdown(graph: UserNewsGraph, partition: Partition, article_key: str) -> SentimentBreakdown:
    """Per-group tweet counts and virality split by sentiment for one article.

    Every group of the partition appears (zeros included), followed by
    ``Nonpartisan`` for sharers outside the partition.
    """
    if article_key not in graph.articles:
        raise KeyError(f"unknown article {article_key!r}")
    groups = {partition.group_name(g): GroupSentiment() for g in range(partition.B)}
    groups[NONPARTISAN] = GroupSentiment()
    for e in graph.edges:
        if e.article_key != article_key:
            continue
        g = partition.assignment.get(e.user_id)
        name = NONPARTISAN if g is None else partition.group_name(g)
        groups[name].add(e.sentiment, e.virality)
    return SentimentBreakdown(article_key, groups)


def negativity_share(breakdown: SentimentBreakdown, group: str) -> float | None:
    total = breakdown.virality_total
    if total == 0:
        return None
    return breakdown.groups[group].virality_neg / total


# -- outlets --------------------------------------------------------------------------

@dataclass(frozen=True)
class OutletRow:
    period: str
    topic: str
    group: str
    outlet: str
    count: int
    rank: int


def outlet_table(graph: UserNewsGraph, partition: Partition, topic: str = "", period: str = "",
                 top_n: int | None = DEFAULT_TOP_OUTLETS, per_share: bool = False,
                 include_nonpartisan: bool = False) -> list[OutletRow]:
    """Articles per (group, outlet), ranked within each group.

    By default an article counts once per group however many members shared
    it; ``per_share=True`` counts sharing tweets instead.
    """
    seen: dict[str, dict[str, set]] = defaultdict(lambda: defaultdict(set))
    shares: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for e in graph.edges:
        g = partition.assignment.get(e.user_id)
        if g is None and not include_nonpartisan:
            continue
        name = NONPARTISAN if g is None else partition.group_name(g)
        outlet = graph.articles[e.article_key].outlet
        seen[name][outlet].add(e.article_key)
        shares[name][outlet] += 1
    names = [partition.group_name(g) for g in range(partition.B)]
    if include_nonpartisan:
        names.append(NONPARTISAN)
    rows = []
    for name in names:
        counts = shares[name] if per_share else {o: len(s) for o, s in seen[name].items()}
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        if top_n is not None:
            ranked = ranked[:top_n]
        rows.extend(OutletRow(period, topic, name, o, c, i + 1) for i, (o, c) in enumerate(ranked))
    return rows


# -- writers ----------------------------------------------------------------------------

def viral_rows(graph: UserNewsGraph, partition: Partition, k: int) -> tuple[list[str], list[list]]:
    names = partition.group_names + [NONPARTISAN]
    header = ["rank", "article_key", "outlet", "centrality"]
    for n in names:
        header += [f"{n}_tweets", f"{n}_pos", f"{n}_neg", f"{n}_virality", f"{n}_virality_pos", f"{n}_virality_neg"]
    rows = []
    for i, (key, cent) in enumerate(top_viral_news(graph, k) if graph.articles else []):
        b = group_sentiment_breakdown(graph, partition, key)
        row = [i + 1, key, graph.articles[key].outlet, cent]
        for n in names:
            g = b.groups[n]
            row += [g.tweet_count, g.pos_count, g.neg_count, g.virality_total, g.virality_pos, g.virality_neg]
        rows.append(row)
    return header, rows


def write_viral_csv(graph: UserNewsGraph, partition: Partition, k: int, path: str | Path) -> None:
    header, rows = viral_rows(graph, partition, k)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_outlets_csv(rows: Iterable[OutletRow], path: str | Path, per_share: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "topic", "group", "outlet", "shares" if per_share else "unique_articles", "rank"])
        for r in rows:
            w.writerow([r.period, r.topic, r.group, r.outlet, r.count, r.rank])


def write_breakdowns_json(breakdowns: Sequence[SentimentBreakdown], path: str | Path,
                          extra: Mapping | None = None) -> None:
    articles = []
    for b in breakdowns:
        d = b.to_dict()
        d["virality_total"] = b.virality_total
        d["negativity_share"] = {name: negativity_share(b, name) for name in b.groups}
        articles.append(d)
    doc = {"articles": articles}
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, ensure_ascii=False, indent=1, sort_keys=False, allow_nan=False)
        fh.write("\n")
