"""Seeded synthetic event streams with known ground truth, and a table-count oracle.

All draws come from :class:`polarscope.rng.CounterRNG`, so a spec and seed
pin the output byte for byte.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from functools import lru_cache
from typing import Mapping, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from .groups import Partition
from .ingest import InteractionEvent
from .rng import CounterRNG

WEEK_SECONDS = 7 * 24 * 3600


class SpecError(ValueError):
    pass


def _utc_midnight(day: date) -> datetime:
    return datetime(day.year, day.month, day.day, tzinfo=timezone.utc)


def _local_midnight(day: date, tz: str) -> datetime:
    return datetime(day.year, day.month, day.day, tzinfo=ZoneInfo(tz))


def _as_date(value) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    return date.fromisoformat(str(value))


@dataclass
class PlantedStreamSpec:
    """Retweet stream with planted assortative blocs.

    ``p_in`` / ``p_out`` are relative endorsement propensities per ordered
    user pair; ``p_out_schedule`` optionally overrides ``p_out`` week by week.
    ``news_fraction`` of the retweets carry a link from ``news_urls`` in the
    retweeted status.
    """

    n_users: int
    blocs: list[tuple[str, int]]
    weeks: int
    events_per_week: int
    p_in: float
    p_out: float
    activity_exponent: float = 0.0
    label_noise: float = 0.0
    seed: int = 0
    start: date = date(2019, 1, 7)
    id_prefix: str = "rt"
    user_prefix: str = "u"
    text: str | list[str] = ""  # a list draws one entry per event
    p_out_schedule: list[float] | None = None
    news_urls: list[str] = field(default_factory=list)
    news_fraction: float = 0.0
    p_matrix: list[list[float]] | None = None  # overrides p_in / p_out when given
    tz: str = "UTC"  # weeks start at local midnight of this zone

    def validate(self) -> None:
        if self.n_users < 2:
            raise SpecError("n_users must be >= 2")
        if not self.blocs or any(size < 1 for _, size in self.blocs):
            raise SpecError("blocs must be non-empty with positive sizes")
        if sum(size for _, size in self.blocs) != self.n_users:
            raise SpecError("bloc sizes must sum to n_users")
        if len({label for label, _ in self.blocs}) != len(self.blocs):
            raise SpecError("bloc labels must be unique")
        if self.weeks < 1 or self.events_per_week < 0:
            raise SpecError("weeks must be >= 1 and events_per_week >= 0")
        outs = [self.p_out] + list(self.p_out_schedule or [])
        if not (0 <= self.p_in <= 1) or any(not (0 <= p <= 1) for p in outs):
            raise SpecError("p_in and p_out must lie in [0, 1]")
        if self.p_in == 0 and all(p == 0 for p in outs):
            raise SpecError("p_in and p_out cannot both be zero")
        if self.p_out_schedule is not None and len(self.p_out_schedule) != self.weeks:
            raise SpecError("p_out_schedule needs one value per week")
        if not (0 <= self.label_noise < 1):
            raise SpecError("label_noise must lie in [0, 1)")
        if self.activity_exponent < 0:
            raise SpecError("activity_exponent must be >= 0")
        if not (0 <= self.news_fraction <= 1) or (self.news_fraction > 0 and not self.news_urls):
            raise SpecError("news_fraction needs news_urls and must lie in [0, 1]")
        if self.p_matrix is not None:
            G = len(self.blocs)
            P = np.asarray(self.p_matrix, dtype=float)
            if P.shape != (G, G) or (P < 0).any() or (P.sum(axis=1) <= 0).any():
                raise SpecError("p_matrix must be a non-negative bloc x bloc matrix with positive rows")
        elif self.p_in < max(outs):
            warnings.warn("p_in < p_out: disassortative regime", stacklevel=2)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PlantedStreamSpec":
        data = dict(data)
        try:
            data["blocs"] = [(str(b[0]), int(b[1])) if not isinstance(b, Mapping) else (str(b["label"]), int(b["size"]))
                             for b in data["blocs"]]
            if "start" in data:
                data["start"] = _as_date(data["start"])
            return cls(**data)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"invalid planted stream spec: {exc}") from None


def user_ids(n: int, prefix: str = "u") -> list[str]:
    width = max(5, len(str(n - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


def activity_weights(n: int, exponent: float, rng: CounterRNG) -> np.ndarray:
    if exponent == 0:
        return np.ones(n)
    ranks = rng.permutation(n)
    return (ranks + 1.0) ** (-exponent)


def _bloc_index(spec: PlantedStreamSpec) -> np.ndarray:
    return np.repeat(np.arange(len(spec.blocs)), [size for _, size in spec.blocs])


def gen_planted_retweet_stream(spec: PlantedStreamSpec, users: Sequence[str] | None = None):
    """Return ``(events, ground_truth)`` for a planted retweet stream.

    Sources are drawn by activity weight; a source in bloc g then picks the
    target bloc h with probability proportional to ``p_in * (n_g - 1)`` if
    ``h == g`` else ``p_out * n_h``, and a uniform target inside it (never
    itself).  Label noise moves a fixed fraction of users to a different bloc
    in the returned ground truth only.
    """
    spec.validate()
    users = list(users) if users is not None else user_ids(spec.n_users, spec.user_prefix)
    if len(users) != spec.n_users:
        raise SpecError("users must have n_users entries")
    rng = CounterRNG(spec.seed, stream=0)
    bloc = _bloc_index(spec)
    sizes = np.array([s for _, s in spec.blocs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    G = len(sizes)
    weights = activity_weights(spec.n_users, spec.activity_exponent, rng)
    events: list[InteractionEvent] = []
    seq = 0
    for week in range(spec.weeks):
        p_out = spec.p_out_schedule[week] if spec.p_out_schedule is not None else spec.p_out
        if spec.p_matrix is not None:
            prop = np.asarray(spec.p_matrix, dtype=np.float64) * (sizes - np.eye(G, dtype=np.int64))
        else:
            prop = np.tile(p_out * sizes.astype(np.float64), (G, 1))
            prop[np.arange(G), np.arange(G)] = spec.p_in * (sizes - 1)
        cdf = np.cumsum(prop, axis=1)
        if (cdf[:, -1] <= 0).any():
            raise SpecError("some bloc has no admissible retweet target")
        E = spec.events_per_week
        src = rng.choice(weights, E)
        u_bloc, u_tgt, u_time, u_news, u_url = (rng.random(E) for _ in range(5))
        texts = spec.text if isinstance(spec.text, list) else [spec.text]
        pick = (np.floor(rng.random(E) * len(texts)).astype(np.int64) if len(texts) > 1
                else np.zeros(E, dtype=np.int64))
        g = bloc[src]
        tot = cdf[g, -1]
        h = (cdf[g] <= (u_bloc * tot)[:, None]).sum(axis=1)
        h = np.minimum(h, G - 1)
        same = h == g
        span = np.where(same, sizes[h] - 1, sizes[h])
        k = np.minimum(np.floor(u_tgt * span).astype(np.int64), span - 1)
        pos = src - offsets[g]
        k = np.where(same & (k >= pos), k + 1, k)
        tgt = offsets[h] + k
        base = _local_midnight(spec.start + timedelta(weeks=week), spec.tz).timestamp()
        secs = np.floor(u_time * WEEK_SECONDS).astype(np.int64)
        order = np.lexsort((np.arange(E), secs))
        for i in order.tolist():
            s, t = int(src[i]), int(tgt[i])
            rt_urls = None
            if spec.news_urls:
                rt_urls = []
                if u_news[i] < spec.news_fraction:
                    rt_urls = [spec.news_urls[min(int(u_url[i] * len(spec.news_urls)), len(spec.news_urls) - 1)]]
            text = f"RT @{users[t]}: {texts[pick[i]]}".rstrip()
            events.append(InteractionEvent(
                id=f"{spec.id_prefix}{seq}",
                created_at=datetime.fromtimestamp(base + int(secs[i]), tz=timezone.utc),
                author_id=users[s], text=text, kind="retweet",
                retweeted_author_id=users[t], retweeted_status_id=f"s{users[t]}-{seq}",
                urls=tuple(rt_urls or ()), retweeted_urls=tuple(rt_urls) if rt_urls is not None else None,
            ))
            seq += 1
    truth = bloc.copy()
    n_noisy = int(round(spec.label_noise * spec.n_users))
    if n_noisy and G > 1:
        noise_rng = CounterRNG(spec.seed, stream=1)
        chosen = noise_rng.permutation(spec.n_users)[:n_noisy]
        shift = noise_rng.integers(G - 1, n_noisy) + 1
        truth[chosen] = (truth[chosen] + shift) % G
    labels = {i: label for i, (label, _) in enumerate(spec.blocs)}
    present = sorted(set(truth.tolist()))
    remap = {g: i for i, g in enumerate(present)}
    assignment = {u: remap[int(x)] for u, x in zip(users, truth)}
    ground_truth = Partition(assignment, len(present), {remap[g]: labels[g] for g in present})
    return events, ground_truth


# -- news sharing -----------------------------------------------------------------

@dataclass
class NewsStreamSpec:
    """Original tweets sharing news links, one URL per tweet.

    Counts are stratified: for each article a bloc contributes exactly
    ``round(share_rate * bloc_size * affinity)`` distinct sharers, and the
    sentiment labels of those shares follow the bloc's distribution by
    largest-remainder apportionment.  Which users share, in which order and
    with what engagement is random.
    """

    articles: list[tuple[str, str]]  # (url, outlet)
    sentiment: dict[str, tuple[float, float, float]]  # bloc -> (neg, neutral, pos)
    share_rate: dict[str, float]
    engagement: dict[str, float] = field(default_factory=lambda: {"likes": 2.0, "retweets": 0.5, "replies": 0.5})
    sentiment_boost: dict[str, float] = field(default_factory=lambda: {"negative": 1.0, "neutral": 1.0, "positive": 1.0})
    outlet_affinity: dict[str, dict[str, float]] = field(default_factory=dict)
    seed: int = 0
    start: date = date(2019, 1, 7)
    span_days: int = 7
    id_prefix: str = "nw"
    text: str = ""

    def validate(self) -> None:
        if not self.articles:
            raise SpecError("no articles")
        for bloc, dist in self.sentiment.items():
            if len(dist) != 3 or any(p < 0 for p in dist) or not math.isclose(sum(dist), 1.0, abs_tol=1e-9):
                raise SpecError(f"sentiment distribution of {bloc!r} must be 3 non-negative values summing to 1")
        for bloc, rate in self.share_rate.items():
            if not (0 <= rate <= 1):
                raise SpecError(f"share rate of {bloc!r} must lie in [0, 1]")
        if any(v < 0 for v in self.engagement.values()) or any(v < 0 for v in self.sentiment_boost.values()):
            raise SpecError("engagement means and boosts must be non-negative")
        if self.span_days < 1:
            raise SpecError("span_days must be >= 1")

    @classmethod
    def from_dict(cls, data: Mapping) -> "NewsStreamSpec":
        data = dict(data)
        try:
            data["articles"] = [(str(a[0]), str(a[1])) if not isinstance(a, Mapping) else (str(a["url"]), str(a["outlet"]))
                                for a in data["articles"]]
            data["sentiment"] = {k: tuple(float(x) for x in v) for k, v in data["sentiment"].items()}
            if "start" in data:
                data["start"] = _as_date(data["start"])
            return cls(**data)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"invalid news stream spec: {exc}") from None


def apportion(total: int, shares: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``total`` items; ties go to the earlier slot."""
    raw = [total * s for s in shares]
    base = [int(math.floor(x + 1e-9)) for x in raw]
    left = total - sum(base)
    order = sorted(range(len(shares)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:left]:
        base[i] += 1
    return base


_SENT_ORDER = ("negative", "neutral", "positive")


def gen_news_sharing_events(spec: NewsStreamSpec, partition: Partition) -> list[InteractionEvent]:
    spec.validate()
    if partition.labels is None:
        raise SpecError("partition needs bloc labels")
    members = {partition.labels[g]: partition.members(g) for g in range(partition.B)}
    missing = [b for b in spec.share_rate if b not in members]
    if missing:
        raise SpecError(f"partition lacks blocs {missing}")
    rng = CounterRNG(spec.seed, stream=0)
    base = _utc_midnight(spec.start).timestamp()
    span = spec.span_days * 86400
    events: list[InteractionEvent] = []
    seq = 0
    for url, outlet in spec.articles:
        for bloc in sorted(spec.share_rate):
            users = members[bloc]
            rate = spec.share_rate[bloc] * spec.outlet_affinity.get(bloc, {}).get(outlet, 1.0)
            k = min(len(users), int(round(min(rate, 1.0) * len(users))))
            if k == 0:
                continue
            sharers = [users[i] for i in rng.permutation(len(users))[:k].tolist()]
            dist = spec.sentiment.get(bloc, (0.0, 1.0, 0.0))
            quota = apportion(k, dist)
            labels = [s for s, q in zip(_SENT_ORDER, quota) for _ in range(q)]
            labels = [labels[i] for i in rng.permutation(k).tolist()]
            times = np.floor(rng.random(k) * span).astype(np.int64)
            boosts = np.array([spec.sentiment_boost.get(s, 1.0) for s in labels])
            likes = _draw_counts(rng, spec.engagement.get("likes", 0.0), boosts)
            rts = _draw_counts(rng, spec.engagement.get("retweets", 0.0), boosts)
            replies = _draw_counts(rng, spec.engagement.get("replies", 0.0), boosts)
            for j in range(k):
                events.append(InteractionEvent(
                    id=f"{spec.id_prefix}{seq}",
                    created_at=datetime.fromtimestamp(base + int(times[j]), tz=timezone.utc),
                    author_id=sharers[j], text=f"{spec.text} {url}".strip(), kind="original",
                    urls=(url,), like_count=int(likes[j]), retweet_count=int(rts[j]),
                    reply_count=int(replies[j]), sentiment=labels[j],
                ))
                seq += 1
    events.sort(key=lambda e: (e.created_at, int(e.id[len(spec.id_prefix):])))
    return events


def _draw_counts(rng: CounterRNG, mean: float, boosts: np.ndarray) -> np.ndarray:
    # one geometric draw per share, mean scaled by the sentiment boost
    u = rng.random(len(boosts))
    means = mean * boosts
    out = np.zeros(len(boosts), dtype=np.int64)
    pos = means > 0
    q = means[pos] / (1.0 + means[pos])
    out[pos] = np.floor(np.log1p(-u[pos]) / np.log(q)).astype(np.int64)
    return out


# -- oracle -------------------------------------------------------------------------

ORACLE_BUDGET = 14


def oracle_count_tables(row_sums: Sequence[int], col_sums: Sequence[int]) -> int:
    """Count non-negative integer tables by enumerating rows one at a time.

    Every admissible row vector is generated explicitly; completed prefixes
    are shared through a cache keyed on (row index, remaining column sums in
    the original order).  Totals above :data:`ORACLE_BUDGET` are refused.
    """
    rows = tuple(int(x) for x in row_sums)
    cols = tuple(int(x) for x in col_sums)
    if any(x < 0 for x in rows + cols):
        raise ValueError("margins must be non-negative")
    if sum(rows) != sum(cols):
        raise ValueError("margin totals differ")
    if sum(rows) > ORACLE_BUDGET:
        raise ValueError(f"total {sum(rows)} exceeds the enumeration budget {ORACLE_BUDGET}")
    return _oracle(rows, cols)


@lru_cache(maxsize=None)
def _oracle(rows: tuple[int, ...], remaining: tuple[int, ...]) -> int:
    if not rows:
        return 1 if not any(remaining) else 0
    head, tail = rows[0], rows[1:]
    count = 0

    def fill(j: int, left: int, current: list[int]):
        nonlocal count
        if j == len(remaining):
            if left == 0:
                count += _oracle(tail, tuple(c - x for c, x in zip(remaining, current)))
            return
        for x in range(min(left, remaining[j]) + 1):
            current.append(x)
            fill(j + 1, left - x, current)
            current.pop()

    fill(0, head, [])
    return count
