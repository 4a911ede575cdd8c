"""Endorsement (retweet) multigraphs, bipartite user-news graphs and account filters."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Iterable, Mapping, Sequence

from .ingest import InteractionEvent, TimeWindow
from .urls import try_canonicalize

if TYPE_CHECKING:
    from .groups import Partition

BLOCS = ("ConservativeRight", "LiberalLeft", "ModerateRight", "Minor")
ELECTION_YEARS = (2019, 2023)
FILTER_MODES = ("all", "candidates_only", "exclude_candidates")


class UnsupportedInputError(ValueError):
    pass


@dataclass(frozen=True)
class EndorsementGraph:
    """Directed retweet multigraph: edge (a, b) means a retweeted b."""

    window: TimeWindow | None
    nodes: frozenset[str]
    edges: Mapping[tuple[str, str], int]
    event_count: int
    self_loops: int = 0

    def __post_init__(self):
        assert all(m >= 1 for m in self.edges.values())
        assert sum(self.edges.values()) == self.event_count

    @property
    def is_empty(self) -> bool:
        return not self.edges

    def scaled(self, k: int) -> "EndorsementGraph":
        edges = {e: m * k for e, m in self.edges.items()}
        return EndorsementGraph(self.window, self.nodes, edges, self.event_count * k, self.self_loops)


def graph_from_edges(edges: Mapping[tuple[str, str], int] | Iterable[tuple[str, str]],
                     window: TimeWindow | None = None) -> EndorsementGraph:
    """Convenience constructor; self-loops are dropped and counted."""
    counts: Counter = Counter()
    if isinstance(edges, Mapping):
        counts.update(dict(edges))
    else:
        counts.update(edges)
    loops = sum(m for (a, b), m in counts.items() if a == b)
    kept = {e: m for e, m in counts.items() if e[0] != e[1] and m > 0}
    nodes = frozenset(x for e in kept for x in e)
    return EndorsementGraph(window, nodes, kept, sum(kept.values()), loops)


def build_endorsement_graph(events: Iterable[InteractionEvent], window: TimeWindow | None = None) -> EndorsementGraph:
    counts: Counter = Counter()
    loops = 0
    for e in events:
        if e.kind != "retweet":
            continue
        if e.author_id == e.retweeted_author_id:
            loops += 1
            continue
        counts[(e.author_id, e.retweeted_author_id)] += 1
    nodes = frozenset(x for pair in counts for x in pair)
    return EndorsementGraph(window, nodes, dict(counts), sum(counts.values()), loops)


def binarized(graph: EndorsementGraph) -> EndorsementGraph:
    edges = {e: 1 for e in graph.edges}
    return EndorsementGraph(graph.window, graph.nodes, edges, len(edges), graph.self_loops)


# -- participation ------------------------------------------------------------

@dataclass(frozen=True)
class Participation:
    counts: dict[str, int]
    nonpartisan_count: int
    nonpartisan_share: float
    active_count: int


def participation(graph: EndorsementGraph, partition: "Partition") -> Participation:
    counts = {partition.group_name(g): 0 for g in range(partition.B)}
    nonpartisan = 0
    for user in graph.nodes:
        g = partition.assignment.get(user)
        if g is None:
            nonpartisan += 1
        else:
            counts[partition.group_name(g)] += 1
    active = len(graph.nodes)
    share = nonpartisan / active if active else 0.0
    return Participation(counts, nonpartisan, share, active)


# -- news graphs ------------------------------------------------------------

@dataclass(frozen=True)
class NewsArticle:
    article_key: str
    outlet: str
    first_seen: datetime


@dataclass(frozen=True)
class NewsEdge:
    user_id: str
    article_key: str
    sentiment: str
    virality: int
    tweet_id: str


@dataclass
class UserNewsGraph:
    users: set[str] = field(default_factory=set)
    articles: dict[str, NewsArticle] = field(default_factory=dict)
    edges: list[NewsEdge] = field(default_factory=list)
    rejected_urls: int = 0
    missing_sentiment: int = 0

    def article_edges(self, article_key: str) -> list[NewsEdge]:
        return [e for e in self.edges if e.article_key == article_key]


def build_user_news_graph(events: Iterable[InteractionEvent], virality_fn: Callable[[int, int, int], int] | None = None,
                          canonicalize: Callable[[str], tuple[str, str] | None] = try_canonicalize) -> UserNewsGraph:
    """Bipartite user -> article graph from original tweets carrying news links."""
    if virality_fn is None:
        from .newsflow import virality as virality_fn
    graph = UserNewsGraph()
    for e in events:
        if e.kind != "original" or not e.urls:
            continue
        keys: dict[str, str] = {}
        for raw in e.urls:
            canon = canonicalize(raw)
            if canon is None:
                graph.rejected_urls += 1
                continue
            outlet, key = canon
            keys.setdefault(key, outlet)
        if not keys:
            continue
        sentiment = e.sentiment
        if sentiment is None:
            sentiment = "neutral"
            graph.missing_sentiment += 1
        v = virality_fn(e.like_count, e.retweet_count, e.reply_count)
        graph.users.add(e.author_id)
        for key, outlet in keys.items():
            art = graph.articles.get(key)
            if art is None or e.created_at < art.first_seen:
                graph.articles[key] = NewsArticle(key, outlet, e.created_at)
            graph.edges.append(NewsEdge(e.author_id, key, sentiment, v, e.id))
    return graph


def restrict_to_news_retweets(events: Iterable[InteractionEvent],
                              canonicalize: Callable[[str], tuple[str, str] | None] = try_canonicalize) -> list[InteractionEvent]:
    """Retweets whose retweeted status links at least one news article."""
    kept = []
    for e in events:
        if e.kind != "retweet":
            continue
        if e.retweeted_urls is None:
            raise UnsupportedInputError(
                f"retweet {e.id} lacks retweeted_urls; the retweets-with-news variant "
                "needs the retweeted status URLs in the input")
        if any(canonicalize(u) is not None for u in e.retweeted_urls):
            kept.append(e)
    return kept


# -- seed accounts --------------------------------------------------------------

@dataclass(frozen=True)
class SeedAccount:
    handle: str
    author_id: str
    party: str
    bloc: str
    election_year: int


def load_seeds(path: str | Path) -> list[SeedAccount]:
    seeds = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"handle", "author_id", "party", "bloc", "election_year"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"seed file needs columns {sorted(required)}")
        for row in reader:
            bloc = row["bloc"].strip()
            if bloc not in BLOCS:
                raise ValueError(f"line {reader.line_num}: unknown bloc {bloc!r}")
            try:
                year = int(row["election_year"])
            except ValueError:
                raise ValueError(f"line {reader.line_num}: bad election_year") from None
            if year not in ELECTION_YEARS:
                raise ValueError(f"line {reader.line_num}: election_year must be 2019 or 2023")
            if not row["author_id"].strip():
                raise ValueError(f"line {reader.line_num}: empty author_id")
            seeds.append(SeedAccount(row["handle"].strip(), row["author_id"].strip(),
                                     row["party"].strip(), bloc, year))
    return seeds


def write_seeds(seeds: Sequence[SeedAccount], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["handle", "author_id", "party", "bloc", "election_year"])
        for s in seeds:
            w.writerow([s.handle, s.author_id, s.party, s.bloc, s.election_year])


def filter_accounts(events: Iterable[InteractionEvent], mode: str,
                    seeds: Iterable[SeedAccount] | set[str] = ()) -> list[InteractionEvent]:
    """Keep events by the acting account's candidate status."""
    if mode not in FILTER_MODES:
        raise ValueError(f"mode must be one of {FILTER_MODES}")
    events = list(events)
    if mode == "all":
        return events
    ids = {s.author_id if isinstance(s, SeedAccount) else s for s in seeds}
    want = mode == "candidates_only"
    return [e for e in events if (e.author_id in ids) == want]
