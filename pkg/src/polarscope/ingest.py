"""Event parsing, topic keyword matching and calendar windowing."""
from __future__ import annotations

import csv
import io
import json
import logging
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

import yaml

log = logging.getLogger(__name__)

SENTIMENTS = ("negative", "neutral", "positive")
KINDS = ("original", "retweet")
DEFAULT_TIMEZONE = "Europe/Helsinki"

EVENT_FIELDS = (
    "id", "created_at", "author_id", "text", "kind",
    "retweeted_author_id", "retweeted_status_id", "urls",
    "like_count", "retweet_count", "reply_count", "sentiment",
    "retweeted_urls", "retweeted_text",
)


class InvalidEventError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# str.lower() is full lowercase mapping; these code points differ from
# Unicode simple case folding and are patched back.
_SIMPLE_FOLD = str.maketrans({"İ": "İ", "ς": "σ", "ẞ": "ß"})


def fold(text: str) -> str:
    """Simple (one-to-one) Unicode case folding."""
    if "İ" in text:
        return "".join(ch if ch == "İ" else ch.lower() for ch in text).translate(_SIMPLE_FOLD)
    return text.lower().translate(_SIMPLE_FOLD)


@dataclass(frozen=True, slots=True)
class InteractionEvent:
    """One tweet or retweet.

    ``retweeted_urls`` / ``retweeted_text`` describe the retweeted status when
    the source data carries them; ``None`` means "not supplied", which is
    different from an empty list.
    """

    id: str
    created_at: datetime
    author_id: str
    text: str
    kind: str
    retweeted_author_id: str | None = None
    retweeted_status_id: str | None = None
    urls: tuple[str, ...] = ()
    like_count: int = 0
    retweet_count: int = 0
    reply_count: int = 0
    sentiment: str | None = None
    retweeted_urls: tuple[str, ...] | None = None
    retweeted_text: str | None = None

    def __post_init__(self):
        if not self.id:
            raise InvalidEventError("empty id")
        if not self.author_id:
            raise InvalidEventError("empty author_id")
        if self.kind not in KINDS:
            raise InvalidEventError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "retweet":
            if not self.retweeted_author_id or not self.retweeted_status_id:
                raise InvalidEventError("retweet without retweeted_author_id/retweeted_status_id")
        elif self.retweeted_author_id is not None or self.retweeted_status_id is not None:
            raise InvalidEventError("original tweet carries retweeted_* fields")
        for name in ("like_count", "retweet_count", "reply_count"):
            value = getattr(self, name)
            if type(value) is not int or value < 0:
                raise InvalidEventError(f"{name} must be a non-negative integer, got {value!r}")
        if self.sentiment is not None and self.sentiment not in SENTIMENTS:
            raise InvalidEventError(f"unknown sentiment {self.sentiment!r}")
        if self.created_at.tzinfo is None:
            raise InvalidEventError("created_at must carry a UTC offset")

    @property
    def timestamp(self) -> int:
        return int(self.created_at.timestamp())


_FRACTION = re.compile(r"(?<=:\d\d)[.,]\d+")


def parse_timestamp(value: str) -> datetime:
    """RFC 3339 to an aware UTC datetime truncated to whole seconds."""
    if not isinstance(value, str):
        raise InvalidEventError(f"created_at must be a string, got {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    # fromisoformat (3.10) only takes 3 or 6 fraction digits; seconds are truncated anyway
    text = _FRACTION.sub("", text)
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        raise InvalidEventError(f"unparseable timestamp {value!r}") from None
    if stamp.tzinfo is None:
        raise InvalidEventError(f"timestamp without offset {value!r}")
    return stamp.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(stamp: datetime) -> str:
    return stamp.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _opt_str(value) -> str | None:
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise InvalidEventError(f"expected a string, got {value!r}")
    return value


def _url_list(value, name: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(u, str) for u in value):
        raise InvalidEventError(f"{name} must be an array of strings")
    return tuple(value)


def _count(value, name: str) -> int:
    if value is None:
        return 0
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidEventError(f"{name} must be an integer, got {value!r}")
    return value


def event_from_dict(obj: dict) -> InteractionEvent:
    if not isinstance(obj, dict):
        raise InvalidEventError("record is not an object")
    missing = [k for k in ("id", "created_at", "author_id", "kind") if k not in obj]
    if missing:
        raise InvalidEventError(f"missing field(s): {', '.join(missing)}")
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise InvalidEventError("text must be a string")
    rt_urls = obj.get("retweeted_urls")
    return InteractionEvent(
        id=str(obj["id"]),
        created_at=parse_timestamp(obj["created_at"]),
        author_id=str(obj["author_id"]),
        text=text,
        kind=obj["kind"],
        retweeted_author_id=_opt_str(obj.get("retweeted_author_id")),
        retweeted_status_id=_opt_str(obj.get("retweeted_status_id")),
        urls=_url_list(obj.get("urls"), "urls"),
        like_count=_count(obj.get("like_count"), "like_count"),
        retweet_count=_count(obj.get("retweet_count"), "retweet_count"),
        reply_count=_count(obj.get("reply_count"), "reply_count"),
        sentiment=_opt_str(obj.get("sentiment")),
        retweeted_urls=None if rt_urls is None else _url_list(rt_urls, "retweeted_urls"),
        retweeted_text=_opt_str(obj.get("retweeted_text")),
    )


def event_to_dict(event: InteractionEvent) -> dict:
    """JSON-ready dict with a fixed key order; absent optionals are omitted."""
    out = {
        "id": event.id,
        "created_at": format_timestamp(event.created_at),
        "author_id": event.author_id,
        "text": event.text,
        "kind": event.kind,
    }
    if event.kind == "retweet":
        out["retweeted_author_id"] = event.retweeted_author_id
        out["retweeted_status_id"] = event.retweeted_status_id
    out["urls"] = list(event.urls)
    out["like_count"] = event.like_count
    out["retweet_count"] = event.retweet_count
    out["reply_count"] = event.reply_count
    if event.sentiment is not None:
        out["sentiment"] = event.sentiment
    if event.retweeted_urls is not None:
        out["retweeted_urls"] = list(event.retweeted_urls)
    if event.retweeted_text is not None:
        out["retweeted_text"] = event.retweeted_text
    return out


def event_to_json(event: InteractionEvent) -> str:
    return json.dumps(event_to_dict(event), ensure_ascii=False, separators=(",", ":"))


@dataclass
class ParseReport:
    parsed: int = 0
    rejected: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def counts(self) -> tuple[int, int]:
        return self.parsed, self.rejected


def _csv_record(row: dict) -> dict:
    rec: dict = {k: (v if v != "" else None) for k, v in row.items() if k is not None}
    for name in ("like_count", "retweet_count", "reply_count"):
        if rec.get(name) is not None:
            try:
                rec[name] = int(rec[name])
            except ValueError:
                raise InvalidEventError(f"{name} is not an integer: {rec[name]!r}") from None
    for name in ("urls", "retweeted_urls"):
        if rec.get(name) is not None:
            try:
                rec[name] = json.loads(rec[name])
            except json.JSONDecodeError:
                raise InvalidEventError(f"{name} is not a JSON array") from None
    if rec.get("text") is None:
        rec["text"] = ""
    return rec


def _records(source: IO[bytes] | Iterable[bytes], fmt: str) -> Iterator[tuple[int, dict | Exception]]:
    if fmt == "jsonl":
        for line_no, raw in enumerate(source, start=1):
            try:
                line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
            except UnicodeDecodeError as exc:
                yield line_no, InvalidEventError(f"not UTF-8: {exc}")
                continue
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                yield line_no, InvalidEventError(f"malformed JSON: {exc.msg}")
    elif fmt == "csv":
        stream = io.TextIOWrapper(source, encoding="utf-8", newline="") if hasattr(source, "readable") else source
        reader = csv.DictReader(stream)
        for row in reader:
            line_no = reader.line_num
            try:
                yield line_no, _csv_record(row)
            except InvalidEventError as exc:
                yield line_no, exc
    else:
        raise ConfigError(f"unknown event format {fmt!r}")


def parse_events(source: IO[bytes] | Iterable[bytes], fmt: str = "jsonl") -> tuple[list[InteractionEvent], ParseReport]:
    """Parse events in file order.

    Bad records are rejected per line and counted; the first occurrence of an
    id wins and later duplicates are rejected.
    """
    report = ParseReport()
    events: list[InteractionEvent] = []
    seen: set[str] = set()
    for line_no, rec in _records(source, fmt):
        try:
            if isinstance(rec, Exception):
                raise rec
            event = event_from_dict(rec)
            if event.id in seen:
                raise InvalidEventError(f"duplicate id {event.id!r}")
        except (InvalidEventError, TypeError) as exc:
            report.rejected += 1
            report.errors.append((line_no, str(exc)))
            continue
        seen.add(event.id)
        events.append(event)
        report.parsed += 1
    return events, report


def read_events(path: str | Path) -> tuple[list[InteractionEvent], ParseReport]:
    """Read a ``.jsonl`` / ``.csv`` file (optionally ``.gz``)."""
    path = Path(path)
    suffixes = path.suffixes
    fmt = "csv" if ".csv" in suffixes else "jsonl"
    if suffixes and suffixes[-1] == ".gz":
        import gzip
        with gzip.open(path, "rb") as fh:
            return parse_events(fh, fmt)
    with open(path, "rb") as fh:
        return parse_events(fh, fmt)


def write_events(events: Iterable[InteractionEvent], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for event in events:
            fh.write(event_to_json(event))
            fh.write("\n")
            n += 1
    return n


# -- topics -----------------------------------------------------------------

@dataclass(frozen=True)
class TopicConfig:
    topic_id: str
    keywords: tuple[str, ...]

    def __post_init__(self):
        if not self.topic_id:
            raise ConfigError("empty topic id")
        if not self.keywords:
            raise ConfigError(f"topic {self.topic_id!r} has no keywords")
        if any(not isinstance(k, str) or k == "" for k in self.keywords):
            raise ConfigError(f"topic {self.topic_id!r} has an empty or non-string keyword")
        object.__setattr__(self, "keywords", tuple(fold(k) for k in self.keywords))

    @property
    def pattern(self) -> re.Pattern:
        # literal alternation: a match exists iff some keyword is a substring
        return _compile_keywords(self.keywords)


_PATTERN_CACHE: dict[tuple[str, ...], re.Pattern] = {}


def _compile_keywords(keywords: tuple[str, ...]) -> re.Pattern:
    pat = _PATTERN_CACHE.get(keywords)
    if pat is None:
        ordered = sorted(set(keywords), key=lambda k: (-len(k), k))
        pat = re.compile("|".join(re.escape(k) for k in ordered))
        _PATTERN_CACHE[keywords] = pat
    return pat


def topic_configs_from_mapping(mapping) -> list[TopicConfig]:
    if not isinstance(mapping, dict) or not mapping:
        raise ConfigError("topic config must be a non-empty mapping of topic id to keyword list")
    configs = []
    for topic_id, keywords in mapping.items():
        if not isinstance(keywords, list):
            raise ConfigError(f"keywords for topic {topic_id!r} must be a list")
        configs.append(TopicConfig(str(topic_id), tuple(keywords)))
    return configs


def load_topic_configs(path: str | Path) -> list[TopicConfig]:
    """Load a YAML mapping ``topic_id -> [keyword, ...]``.

    ``builtin:<name>`` loads a file shipped in ``polarscope/data``.
    """
    text = _read_config_text(path)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"topic config is not valid YAML: {exc}") from None
    return topic_configs_from_mapping(data)


def _read_config_text(path: str | Path) -> str:
    s = str(path)
    if s.startswith("builtin:"):
        name = s.split(":", 1)[1]
        return resources.files("polarscope.data").joinpath(f"{name}.yaml").read_text(encoding="utf-8")
    return Path(path).read_text(encoding="utf-8")


def load_keyword_list(path: str | Path) -> list[str]:
    data = yaml.safe_load(_read_config_text(path))
    if isinstance(data, dict):
        data = data.get("keywords")
    if not isinstance(data, list) or not all(isinstance(k, str) and k for k in data):
        raise ConfigError("keyword file must hold a list of non-empty strings")
    return [fold(k) for k in data]


def match_topics(text: str, configs: Sequence[TopicConfig]) -> set[str]:
    """Topics with at least one keyword occurring as a substring of the folded text."""
    if not text:
        return set()
    folded = fold(text)
    return {c.topic_id for c in configs if c.pattern.search(folded)}


def event_topics(event: InteractionEvent, configs: Sequence[TopicConfig], use_retweeted_text: bool = True) -> set[str]:
    topics = match_topics(event.text, configs)
    if use_retweeted_text and event.kind == "retweet" and event.retweeted_text:
        topics |= match_topics(event.retweeted_text, configs)
    return topics


def split_journalism(events: Iterable[InteractionEvent], journalism_keywords: Sequence[str]):
    """Split into (subject_matter, journalism_targeting), preserving order."""
    subject, journalism = [], []
    keywords = tuple(fold(k) for k in journalism_keywords if k)
    if not keywords:
        return list(events), journalism
    pattern = _compile_keywords(keywords)
    for event in events:
        (journalism if pattern.search(fold(event.text)) else subject).append(event)
    return subject, journalism


# -- windows ----------------------------------------------------------------

@dataclass(frozen=True)
class StudyPeriod:
    name: str
    start: date
    end: date

    def __post_init__(self):
        if self.start > self.end:
            raise ConfigError(f"period {self.name!r} starts after it ends")


def check_periods(periods: Sequence[StudyPeriod]) -> None:
    ordered = sorted(periods, key=lambda p: p.start)
    for a, b in zip(ordered, ordered[1:]):
        if b.start <= a.end:
            raise ConfigError(f"periods {a.name!r} and {b.name!r} overlap")


@dataclass(frozen=True)
class WindowScheme:
    kind: str  # weekly | bimonthly | days
    days: int = 0

    @classmethod
    def parse(cls, text: str) -> "WindowScheme":
        text = str(text).strip().lower()
        if text == "weekly":
            return cls("weekly")
        if text in ("bimonthly", "bi-monthly"):
            return cls("bimonthly")
        if text.startswith("days:"):
            try:
                n = int(text.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"bad window scheme {text!r}") from None
            if n < 1:
                raise ConfigError("custom window length must be >= 1 day")
            return cls("days", n)
        raise ConfigError(f"unknown window scheme {text!r} (weekly, bimonthly, days:N)")

    def __str__(self):
        return f"days:{self.days}" if self.kind == "days" else self.kind


@dataclass(frozen=True)
class TimeWindow:
    index: int
    start: datetime
    end: datetime
    scheme: str

    @property
    def label(self) -> str:
        return self.start.date().isoformat()


@dataclass
class WindowedEvents:
    windows: list[tuple[TimeWindow, list[InteractionEvent]]]
    dropped: int = 0

    def __iter__(self):
        return iter(self.windows)

    def __len__(self):
        return len(self.windows)


def get_zone(name: str) -> ZoneInfo:
    try:
        return ZoneInfo(name)
    except (ZoneInfoNotFoundError, ValueError):
        raise ConfigError(f"unknown timezone {name!r}") from None


def _local_midnight(day: date, zone: ZoneInfo) -> datetime:
    return datetime(day.year, day.month, day.day, tzinfo=zone)


def _add_months(day: date, months: int) -> date:
    m = day.month - 1 + months
    return date(day.year + m // 12, m % 12 + 1, 1)


def window_bounds(scheme: WindowScheme | str, period: StudyPeriod, tz: str = DEFAULT_TIMEZONE) -> list[TimeWindow]:
    """Contiguous windows covering the whole period in local calendar time."""
    if isinstance(scheme, str):
        scheme = WindowScheme.parse(scheme)
    zone = get_zone(tz)
    stop = period.end + timedelta(days=1)
    if scheme.kind == "weekly":
        first = period.start - timedelta(days=period.start.weekday())
        step = lambda d: d + timedelta(days=7)  # noqa: E731
    elif scheme.kind == "bimonthly":
        first = date(period.start.year, period.start.month, 1)
        step = lambda d: _add_months(d, 2)  # noqa: E731
    else:
        first = period.start
        step = lambda d: d + timedelta(days=scheme.days)  # noqa: E731
    bounds = []
    day = first
    while day < stop:
        nxt = step(day)
        bounds.append(TimeWindow(len(bounds), _local_midnight(day, zone), _local_midnight(nxt, zone), str(scheme)))
        day = nxt
    return bounds


def window_events(events: Iterable[InteractionEvent], scheme: WindowScheme | str, period: StudyPeriod,
                  tz: str = DEFAULT_TIMEZONE) -> WindowedEvents:
    """Assign each in-period event to its window; empty windows are kept."""
    windows = window_bounds(scheme, period, tz)
    zone = get_zone(tz)
    lo = _local_midnight(period.start, zone).timestamp()
    hi = _local_midnight(period.end + timedelta(days=1), zone).timestamp()
    starts = [w.start.timestamp() for w in windows]
    buckets: list[list[InteractionEvent]] = [[] for _ in windows]
    dropped = 0
    for event in events:
        t = event.created_at.timestamp()
        if t < lo or t >= hi:
            dropped += 1
            continue
        buckets[bisect_right(starts, t) - 1].append(event)
    return WindowedEvents(list(zip(windows, buckets)), dropped)


def period_events(events: Iterable[InteractionEvent], period: StudyPeriod, tz: str = DEFAULT_TIMEZONE) -> list[InteractionEvent]:
    zone = get_zone(tz)
    lo = _local_midnight(period.start, zone).timestamp()
    hi = _local_midnight(period.end + timedelta(days=1), zone).timestamp()
    return [e for e in events if lo <= e.created_at.timestamp() < hi]
