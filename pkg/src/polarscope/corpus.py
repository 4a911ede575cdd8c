"""Multi-topic, multi-period synthetic corpus for end-to-end runs.

A corpus spec describes a user population split into blocs, candidate seed
accounts, study periods and topics.  Each (period, topic) pair gets a planted
retweet stream over the topic's participants plus original tweets, some of
which share news links with bloc-dependent sentiment.  Output is a complete
run directory: events, seed accounts, ground truth and a run config.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Mapping
from zoneinfo import ZoneInfo

import numpy as np
import yaml

from .graphs import BLOCS, SeedAccount, write_seeds
from .ingest import InteractionEvent, event_to_json
from .rng import CounterRNG
from .synth import WEEK_SECONDS, PlantedStreamSpec, SpecError, gen_planted_retweet_stream, user_ids

MAJOR_BLOCS = ("ConservativeRight", "LiberalLeft", "ModerateRight")
SENT = ("negative", "neutral", "positive")


@dataclass
class TopicSpec:
    name: str
    phrases: list[str]
    participation: dict[str, float]
    retweets_per_week: int
    originals_per_week: int
    p_in: float = 0.5
    p_out: float = 0.1
    p_matrix: dict[str, list[list[float]]] | None = None  # per period name
    news_fraction: float = 0.0
    retweet_news_fraction: float = 0.0
    sentiment: dict[str, list[float]] = field(default_factory=dict)
    journalism_fraction: float = 0.0


@dataclass
class PeriodSpec:
    name: str
    start: date
    weeks: int
    government_parties: list[str]

    @property
    def end(self) -> date:
        return self.start + timedelta(days=7 * self.weeks - 1)


@dataclass
class CorpusSpec:
    seed: int
    blocs: dict[str, int]
    parties: dict[str, str]  # party -> bloc
    candidates: dict[str, int]  # party -> number of seed accounts
    periods: list[PeriodSpec]
    topics: list[TopicSpec]
    outlets: dict[str, dict[str, float]]  # outlet -> bloc affinity
    articles_per_week: int = 20
    activity_exponent: float = 0.5
    engagement: dict[str, float] = field(default_factory=lambda: {"likes": 3.0, "retweets": 1.0, "replies": 1.0})
    negative_boost: float = 1.5
    timezone: str = "Europe/Helsinki"
    journalism_phrase: str = "toimittaja"
    run: dict = field(default_factory=dict)  # extra keys copied into the run config

    @classmethod
    def from_dict(cls, data: Mapping) -> "CorpusSpec":
        data = dict(data)
        data.pop("kind", None)
        try:
            data["periods"] = [PeriodSpec(str(p["name"]), date.fromisoformat(str(p["start"])), int(p["weeks"]),
                                          list(p.get("government_parties", []))) for p in data["periods"]]
            data["topics"] = [TopicSpec(name=str(name), **t) for name, t in data["topics"].items()]
            spec = cls(**data)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"invalid corpus spec: {exc}") from None
        spec.validate()
        return spec

    def validate(self) -> None:
        if any(b not in MAJOR_BLOCS for b in self.blocs):
            raise SpecError(f"corpus blocs must be among {MAJOR_BLOCS}")
        if any(b not in BLOCS for b in self.parties.values()):
            raise SpecError("party blocs must be seed-file blocs")
        if set(self.candidates) - set(self.parties):
            raise SpecError("candidates name unknown parties")
        names = [t.name for t in self.topics]
        if "parties" not in names or len(set(names)) != len(names):
            raise SpecError("topics must be unique and include 'parties'")
        for t in self.topics:
            if not t.phrases:
                raise SpecError(f"topic {t.name!r} needs phrases")
            for b, dist in t.sentiment.items():
                if len(dist) != 3 or abs(sum(dist) - 1) > 1e-9:
                    raise SpecError(f"sentiment of {t.name}/{b} must be 3 shares summing to 1")
        ordered = sorted(self.periods, key=lambda p: p.start)
        for a, b in zip(ordered, ordered[1:]):
            if b.start <= a.end:
                raise SpecError("periods overlap")


def _stream_seed(seed: int, *parts) -> int:
    h = hashlib.sha256(repr((seed,) + parts).encode()).digest()
    return int.from_bytes(h[:8], "little")


@dataclass
class Corpus:
    events: list[InteractionEvent]
    users: list[str]
    bloc_of: dict[str, str]
    seeds: list[SeedAccount]


def generate_corpus(spec: CorpusSpec) -> Corpus:
    rng = CounterRNG(spec.seed, stream=0)
    n = sum(spec.blocs.values())
    users = user_ids(n)
    bloc_of: dict[str, str] = {}
    by_bloc: dict[str, list[str]] = {}
    i = 0
    for b in MAJOR_BLOCS:
        size = spec.blocs.get(b, 0)
        by_bloc[b] = users[i:i + size]
        for u in by_bloc[b]:
            bloc_of[u] = b
        i += size

    # seed accounts: drawn without replacement inside the party's (or, for
    # Minor parties, the ConservativeRight) user pool
    seeds: list[SeedAccount] = []
    pool_pos = {b: 0 for b in MAJOR_BLOCS}
    shuffled = {b: [by_bloc[b][k] for k in rng.permutation(len(by_bloc[b])).tolist()] for b in MAJOR_BLOCS if by_bloc[b]}
    for party in sorted(spec.candidates):
        bloc = spec.parties[party]
        pool = bloc if bloc in shuffled else "ConservativeRight"
        for k in range(spec.candidates[party]):
            u = shuffled[pool][pool_pos[pool]]
            pool_pos[pool] += 1
            year = 2023 if bloc == "Minor" or k % 2 else 2019
            seeds.append(SeedAccount(f"@cand_{u}", u, party, bloc, year))

    events: list[InteractionEvent] = []
    zone = ZoneInfo(spec.timezone)
    for ti, topic in enumerate(spec.topics):
        trng = CounterRNG(_stream_seed(spec.seed, "participants", topic.name), 0)
        part: list[str] = []
        sizes = []
        for b in MAJOR_BLOCS:
            pool = by_bloc[b]
            k = int(round(topic.participation.get(b, 0.0) * len(pool)))
            chosen = sorted(pool[j] for j in trng.permutation(len(pool))[:k].tolist())
            if k:
                sizes.append((b, k))
                part.extend(chosen)
        if len(part) < 2:
            raise SpecError(f"topic {topic.name!r} has fewer than 2 participants")
        for pi, period in enumerate(spec.periods):
            articles = _articles(spec, topic, pi, period)
            p_matrix = (topic.p_matrix or {}).get(period.name)
            rt_spec = PlantedStreamSpec(
                n_users=len(part), blocs=sizes, weeks=period.weeks, events_per_week=topic.retweets_per_week,
                p_in=topic.p_in, p_out=topic.p_out, activity_exponent=spec.activity_exponent,
                seed=_stream_seed(spec.seed, "retweets", topic.name, period.name), start=period.start,
                id_prefix=f"{pi}{ti}r", text=list(topic.phrases), tz=spec.timezone,
                news_urls=[url for week in articles for url, _ in week] if topic.retweet_news_fraction else [],
                news_fraction=topic.retweet_news_fraction, p_matrix=p_matrix,
            )
            rts, _ = gen_planted_retweet_stream(rt_spec, users=part)
            events.extend(rts)
            events.extend(_originals(spec, topic, ti, pi, period, part, bloc_of, articles, zone))
    events.sort(key=lambda e: (e.created_at, e.id))
    return Corpus(events, users, bloc_of, seeds)


def _articles(spec: CorpusSpec, topic: TopicSpec, pi: int, period: PeriodSpec) -> list[list[tuple[str, str]]]:
    outlets = sorted(spec.outlets)
    rng = CounterRNG(_stream_seed(spec.seed, "articles", topic.name, period.name), 0)
    weeks = []
    for w in range(period.weeks):
        picks = rng.integers(len(outlets), spec.articles_per_week)
        variant = rng.integers(3, spec.articles_per_week)
        week = []
        for k, (o, v) in enumerate(zip(picks.tolist(), variant.tolist())):
            outlet = outlets[o]
            path = f"{topic.name}/{period.name}-{w:02d}-{k:03d}.html"
            url = (f"https://www.{outlet}/{path}?utm_source=twitter", f"http://{outlet}/{path}",
                   f"https://m.{outlet}/{path}#comments")[v]
            week.append((url, outlet))
        weeks.append(week)
    return weeks


def _originals(spec: CorpusSpec, topic: TopicSpec, ti: int, pi: int, period: PeriodSpec, part: list[str],
               bloc_of: Mapping[str, str], articles, zone) -> list[InteractionEvent]:
    rng = CounterRNG(_stream_seed(spec.seed, "originals", topic.name, period.name), 0)
    weights = (rng.permutation(len(part)) + 1.0) ** (-spec.activity_exponent)
    E = topic.originals_per_week
    out = []
    seq = 0
    for w in range(period.weeks):
        day = period.start + timedelta(weeks=w)
        base = datetime(day.year, day.month, day.day, tzinfo=zone).timestamp()
        authors = rng.choice(weights, E)
        u_time, u_news, u_art, u_sent, u_phrase, u_journ = (rng.random(E) for _ in range(6))
        geo = {k: rng.random(E) for k in ("likes", "retweets", "replies")}
        week_articles = articles[w]
        for i in np.lexsort((np.arange(E), np.floor(u_time * WEEK_SECONDS))).tolist():
            author = part[int(authors[i])]
            bloc = bloc_of[author]
            phrase = topic.phrases[min(int(u_phrase[i] * len(topic.phrases)), len(topic.phrases) - 1)]
            created = datetime.fromtimestamp(base + int(u_time[i] * WEEK_SECONDS), tz=zone)
            urls: tuple[str, ...] = ()
            sentiment = None
            likes = rts = replies = 0
            text = phrase
            if week_articles and u_news[i] < topic.news_fraction:
                aff = np.array([spec.outlets[o].get(bloc, 1.0) for _, o in week_articles])
                cdf = np.cumsum(aff)
                j = min(int(np.searchsorted(cdf, u_art[i] * cdf[-1], side="right")), len(week_articles) - 1)
                urls = (week_articles[j][0],)
                dist = topic.sentiment.get(bloc, [0.0, 1.0, 0.0])
                sentiment = SENT[min(int(np.searchsorted(np.cumsum(dist), u_sent[i], side="right")), 2)]
                boost = spec.negative_boost if sentiment == "negative" else 1.0
                counts = []
                for key in ("likes", "retweets", "replies"):
                    mean = spec.engagement.get(key, 0.0) * boost
                    q = mean / (1.0 + mean)
                    counts.append(int(np.floor(np.log1p(-geo[key][i]) / np.log(q))) if mean > 0 else 0)
                likes, rts, replies = counts
                if u_journ[i] < topic.journalism_fraction:
                    text = f"{phrase} {spec.journalism_phrase}"
                text = f"{text} {urls[0]}"
            out.append(InteractionEvent(
                id=f"{pi}{ti}o{seq}", created_at=created.astimezone(ZoneInfo("UTC")), author_id=author,
                text=text, kind="original", urls=urls, like_count=likes, retweet_count=rts,
                reply_count=replies, sentiment=sentiment,
            ))
            seq += 1
    return out


def write_corpus(spec: CorpusSpec, out_dir: str | Path) -> dict[str, Path]:
    """Generate and write ``events.jsonl``, ``seeds.csv``, ``truth.csv`` and ``config.yaml``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate_corpus(spec)
    paths = {k: out / v for k, v in
             {"events": "events.jsonl", "seeds": "seeds.csv", "truth": "truth.csv", "config": "config.yaml"}.items()}
    with open(paths["events"], "w", encoding="utf-8", newline="\n") as fh:
        for e in corpus.events:
            fh.write(event_to_json(e))
            fh.write("\n")
    write_seeds(corpus.seeds, paths["seeds"])
    with open(paths["truth"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "bloc"])
        for u in corpus.users:
            w.writerow([u, corpus.bloc_of[u]])
    config = {
        "inputs": ["events.jsonl"],
        "topics": "builtin:topics_table_a1",
        "parties_keywords": "builtin:parties_default",
        "seeds": "seeds.csv",
        "periods": [{"name": p.name, "start": p.start.isoformat(), "end": p.end.isoformat(),
                     "government_parties": p.government_parties} for p in spec.periods],
        "timezone": spec.timezone,
        "output_dir": "out",
    }
    config.update(spec.run)
    paths["config"].write_text(yaml.safe_dump(config, allow_unicode=True, sort_keys=False), encoding="utf-8")
    return paths
