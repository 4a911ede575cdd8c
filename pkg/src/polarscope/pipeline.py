"""Run configuration, corpus indexing and the pipeline commands behind the CLI.

Every command writes plain CSV/JSON with fixed ordering and no timestamps;
run metadata goes to ``<output_dir>/meta/<command>.json``.  Two caches live
under ``cache_dir`` (default ``<output_dir>/cache``) and are safe to delete:

``corpus-<key>/``
    Parsed and topic-tagged events as ``.npy`` columns, keyed by the SHA-256
    of the input files, the topic keywords and the matching mode.
``select/<key>.json``
    Weekly model selections, keyed by a digest of the window graph plus the
    inference parameters.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from . import __version__
from .contingency import SMALL_EXACT_N, THREE_ROW_EXACT_N, TWO_ROW_EXACT_N
from .graphs import (EndorsementGraph, UnsupportedInputError, binarized, build_user_news_graph,
                     load_seeds)
from .groups import (OBJECTIVE_VERSION, SEARCH_VERSION, InferenceError, LabelTieWarning, ModelSelectionResult,
                     Partition, fit_reference_partitions, label_groups, read_partition, select_model,
                     write_partition)
from .ingest import (ConfigError, InteractionEvent, StudyPeriod, TopicConfig, WindowScheme, check_periods,
                     event_to_json, fold, get_zone, load_keyword_list, load_topic_configs, parse_events,
                     read_events, split_journalism, window_bounds)
from .newsflow import (group_sentiment_breakdown, outlet_table, top_viral_news, write_breakdowns_json,
                       write_outlets_csv, write_viral_csv)
from .polarization import (DEFAULT_MIN_OVERLAP, AlignmentEntry, alignment_matrix, polarization_series,
                           write_alignment_csv, write_trends_csv)
from .rng import RNG_VERSION
from .urls import try_canonicalize

log = logging.getLogger(__name__)

INDEX_VERSION = "corpus-index-v1"
SUBSETS = {"all": "all", "candidates-only": "candidates_only", "exclude-candidates": "exclude_candidates"}
DEFAULT_PERIODS = [
    {"name": "sipila", "start": "2015-04-01", "end": "2019-03-31", "government_parties": ["KESK", "PS", "KOK"]},
    {"name": "marin", "start": "2019-04-01", "end": "2023-03-31",
     "government_parties": ["SDP", "KESK", "VIHR", "VAS", "RKP"]},
]
CONFIG_KEYS = {
    "inputs", "topics", "parties_keywords", "parties_topic", "seeds", "periods", "windows", "timezone",
    "subset", "retweets_with_news", "journalism_keywords", "B_max", "seed", "restarts", "min_overlap",
    "binarize", "match_retweeted_text", "top_viral", "top_outlets", "output_dir", "cache_dir", "jobs",
    "outlets_allow", "outlets_deny",
}


class ValidationFailure(Exception):
    """Configuration or input problems; carries a list of findings."""

    def __init__(self, findings: list[dict]):
        self.findings = findings
        super().__init__("; ".join(f"{f['where']}: {f['message']}" for f in findings[:5]))


# -- configuration --------------------------------------------------------------------

@dataclass
class Period:
    study: StudyPeriod
    government_parties: list[str]

    @property
    def name(self) -> str:
        return self.study.name


@dataclass
class RunConfig:
    base_dir: Path
    inputs: list[str]
    topics: str
    seeds: str | None
    periods: list[Period]
    parties_keywords: str | None = None
    parties_topic: str = "parties"
    windows: str = "weekly"
    timezone: str = "Europe/Helsinki"
    subset: str = "all"
    retweets_with_news: bool = False
    journalism_keywords: str | None = "builtin:journalism_default"
    B_max: int = 3
    seed: int = 0
    restarts: int = 4
    min_overlap: int = DEFAULT_MIN_OVERLAP
    binarize: bool = False
    match_retweeted_text: bool = True
    top_viral: int = 50
    top_outlets: int = 5
    output_dir: str = "out"
    cache_dir: str | None = None
    jobs: int = 1
    outlets_allow: list[str] | None = None  # None: every canonicalizable domain is an outlet
    outlets_deny: list[str] = field(default_factory=list)

    # -- paths --
    def resolve(self, p: str) -> Path | str:
        if str(p).startswith("builtin:"):
            return str(p)
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    @property
    def out(self) -> Path:
        return Path(self.resolve(self.output_dir))

    @property
    def cache(self) -> Path:
        return Path(self.resolve(self.cache_dir)) if self.cache_dir else self.out / "cache"

    @property
    def filter_mode(self) -> str:
        return SUBSETS[self.subset]

    def metadata(self) -> dict:
        """Every effective setting, paths as written in the config."""
        meta = {
            "inputs": list(self.inputs), "topics": self.topics, "parties_keywords": self.parties_keywords,
            "parties_topic": self.parties_topic, "seeds": self.seeds,
            "periods": [{"name": p.name, "start": p.study.start.isoformat(), "end": p.study.end.isoformat(),
                         "government_parties": list(p.government_parties)} for p in self.periods],
            "windows": self.windows, "timezone": self.timezone, "subset": self.subset,
            "retweets_with_news": self.retweets_with_news, "journalism_keywords": self.journalism_keywords,
            "B_max": self.B_max, "seed": self.seed, "restarts": self.restarts, "min_overlap": self.min_overlap,
            "binarize": self.binarize, "match_retweeted_text": self.match_retweeted_text,
            "top_viral": self.top_viral, "top_outlets": self.top_outlets,
        }
        # only when set, so runs without outlet lists keep their metadata unchanged
        if self.outlets_allow is not None:
            meta["outlets_allow"] = list(self.outlets_allow)
        if self.outlets_deny:
            meta["outlets_deny"] = list(self.outlets_deny)
        return meta

    def outlet_filter(self):
        """URL canonicalizer that also rejects outlets outside the allow/deny lists."""
        allow = None if self.outlets_allow is None else [_host(d) for d in self.outlets_allow]
        deny = [_host(d) for d in self.outlets_deny]
        if allow is None and not deny:
            return try_canonicalize

        def canonicalize(raw):
            canon = try_canonicalize(raw)
            if canon is None:
                return None
            if any(_under(canon[0], d) for d in deny):
                return None
            if allow is not None and not any(_under(canon[0], d) for d in allow):
                return None
            return canon
        return canonicalize


def _host(domain: str) -> str:
    canon = try_canonicalize(domain)
    return canon[0] if canon else str(domain).strip().lower()


def _under(host: str, domain: str) -> bool:
    return host == domain or host.endswith("." + domain)


def _parse_period(obj, i: int) -> Period:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"periods[{i}] must be a mapping")
    try:
        study = StudyPeriod(str(obj["name"]), date.fromisoformat(str(obj["start"])), date.fromisoformat(str(obj["end"])))
    except KeyError as exc:
        raise ConfigError(f"periods[{i}] lacks {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"periods[{i}]: {exc}") from None
    gov = obj.get("government_parties", [])
    if not isinstance(gov, list):
        raise ConfigError(f"periods[{i}].government_parties must be a list")
    return Period(study, [str(x) for x in gov])


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a YAML run config; ``overrides`` (CLI flags) win over file values."""
    path = Path(path)
    if not path.exists():
        raise ValidationFailure([{"where": str(path), "message": "config file not found"}])
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ValidationFailure([{"where": str(path), "message": f"not valid YAML: {exc}"}]) from None
    if not isinstance(raw, dict):
        raise ValidationFailure([{"where": str(path), "message": "config must be a mapping"}])
    raw = dict(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    return config_from_mapping(raw, path.resolve().parent)


def config_from_mapping(raw: Mapping[str, Any], base_dir: Path) -> RunConfig:
    findings = []

    def bad(where, msg):
        findings.append({"where": where, "message": msg})

    unknown = sorted(set(raw) - CONFIG_KEYS)
    for k in unknown:
        bad(k, "unknown config key")
    inputs = raw.get("inputs")
    if isinstance(inputs, str):
        inputs = [inputs]
    if not inputs or not isinstance(inputs, list):
        bad("inputs", "at least one input file is required")
        inputs = []
    if "topics" not in raw:
        bad("topics", "topic config path is required")
    periods = []
    for i, obj in enumerate(raw.get("periods", DEFAULT_PERIODS)):
        try:
            periods.append(_parse_period(obj, i))
        except ConfigError as exc:
            bad(f"periods[{i}]", str(exc))
    try:
        check_periods([p.study for p in periods])
    except ConfigError as exc:
        bad("periods", str(exc))
    kwargs: dict[str, Any] = {}
    ints = {"B_max": 1, "seed": None, "restarts": 1, "min_overlap": 0, "top_viral": 1, "top_outlets": 1, "jobs": 1}
    for key, lo in ints.items():
        if key in raw:
            v = raw[key]
            if isinstance(v, bool) or not isinstance(v, int) or (lo is not None and v < lo):
                bad(key, f"must be an integer{'' if lo is None else f' >= {lo}'}")
            else:
                kwargs[key] = v
    for key in ("retweets_with_news", "binarize", "match_retweeted_text"):
        if key in raw:
            if not isinstance(raw[key], bool):
                bad(key, "must be true or false")
            else:
                kwargs[key] = raw[key]
    for key in ("parties_keywords", "parties_topic", "timezone", "output_dir", "cache_dir", "journalism_keywords",
                "windows", "subset"):
        if key in raw and raw[key] is not None:
            kwargs[key] = str(raw[key])
    for key in ("outlets_allow", "outlets_deny"):
        if key in raw and raw[key] is not None:
            v = raw[key]
            if not isinstance(v, list) or not all(isinstance(d, str) and d.strip() for d in v):
                bad(key, "must be a list of domains")
            else:
                kwargs[key] = list(v)
    if "windows" in kwargs:
        try:
            WindowScheme.parse(kwargs["windows"])
        except ConfigError as exc:
            bad("windows", str(exc))
    if "subset" in kwargs:
        kwargs["subset"] = kwargs["subset"].replace("_", "-")
        if kwargs["subset"] not in SUBSETS:
            bad("subset", f"must be one of {sorted(SUBSETS)}")
    if "timezone" in kwargs:
        try:
            get_zone(kwargs["timezone"])
        except ConfigError as exc:
            bad("timezone", str(exc))
    if findings:
        raise ValidationFailure(findings)
    return RunConfig(base_dir=Path(base_dir), inputs=[str(x) for x in inputs], topics=str(raw["topics"]),
                     seeds=None if raw.get("seeds") is None else str(raw["seeds"]), periods=periods, **kwargs)


def load_topics(config: RunConfig) -> list[TopicConfig]:
    configs = load_topic_configs(config.resolve(config.topics))
    if config.parties_keywords:
        extra = load_topic_configs(config.resolve(config.parties_keywords))
        have = {c.topic_id for c in configs}
        configs += [c for c in extra if c.topic_id not in have]
    return configs


def analysis_topics(config: RunConfig, topics: Sequence[TopicConfig]) -> list[str]:
    return [t.topic_id for t in topics if t.topic_id != config.parties_topic]


# -- corpus index --------------------------------------------------------------------

def _file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 22), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class CorpusIndex:
    """Column view of a parsed, topic-tagged event corpus.

    ``topic_mask`` bit i is set when the event matches ``topics[i]``.
    ``news_rt`` is 1 / 0 for retweets whose retweeted status does / does not
    carry a canonicalizable URL and -1 when that information is absent.
    Originals with at least one URL are kept in full as ``news_events``.
    """

    users: list[str]
    topics: list[str]
    ts: np.ndarray
    kind: np.ndarray
    author: np.ndarray
    target: np.ndarray
    topic_mask: np.ndarray
    news_rt: np.ndarray
    news_events: list[InteractionEvent]
    news_mask: np.ndarray  # topic bits of news_events
    parsed: int = 0
    rejected: int = 0
    errors: list = field(default_factory=list)

    def topic_bit(self, topic: str) -> np.uint64:
        return np.uint64(1) << np.uint64(self.topics.index(topic))

    def user_index(self, ids) -> np.ndarray:
        pos = {u: i for i, u in enumerate(self.users)}
        return np.array(sorted(pos[u] for u in ids if u in pos), dtype=np.int64)


_COLUMNS = ("ts", "kind", "author", "target", "topic_mask", "news_rt", "news_mask")


def _index_key(config: RunConfig, topics: Sequence[TopicConfig], inputs: Sequence[Path]) -> str:
    h = hashlib.sha256()
    h.update(INDEX_VERSION.encode())
    for p in inputs:
        h.update(p.name.encode())
        h.update(_file_digest(p).encode())
    for t in topics:
        h.update(json.dumps([t.topic_id, list(t.keywords)], ensure_ascii=False).encode())
    h.update(str(config.match_retweeted_text).encode())
    if config.outlets_allow is not None or config.outlets_deny:
        h.update(json.dumps([config.outlets_allow, config.outlets_deny]).encode())
    return h.hexdigest()[:24]


def _read_inputs(paths: Sequence[Path]):
    events: list[InteractionEvent] = []
    seen: set[str] = set()
    parsed = rejected = 0
    errors = []
    for p in paths:
        evs, rep = read_events(p)
        rejected += rep.rejected
        errors.extend({"where": f"{p.name}:{line}", "message": msg} for line, msg in rep.errors)
        for e in evs:
            if e.id in seen:
                rejected += 1
                errors.append({"where": p.name, "message": f"duplicate id {e.id!r} across input files"})
                continue
            seen.add(e.id)
            events.append(e)
            parsed += 1
    return events, parsed, rejected, errors


def build_index(config: RunConfig, topics: Sequence[TopicConfig]) -> CorpusIndex:
    paths = [Path(config.resolve(p)) for p in config.inputs]
    events, parsed, rejected, errors = _read_inputs(paths)
    names = [t.topic_id for t in topics]
    patterns = [t.pattern for t in topics]
    memo: dict[str, int] = {}
    canonicalize = config.outlet_filter()

    def mask_of(text: str) -> int:
        m = memo.get(text)
        if m is None:
            folded = fold(text)
            m = 0
            for bit, pat in enumerate(patterns):
                if pat.search(folded):
                    m |= 1 << bit
            if len(memo) < 1 << 20:
                memo[text] = m
        return m

    users = sorted({e.author_id for e in events} | {e.retweeted_author_id for e in events if e.retweeted_author_id})
    pos = {u: i for i, u in enumerate(users)}
    n = len(events)
    ts = np.empty(n, dtype=np.int64)
    kind = np.empty(n, dtype=np.uint8)
    author = np.empty(n, dtype=np.int32)
    target = np.full(n, -1, dtype=np.int32)
    tmask = np.empty(n, dtype=np.uint64)
    news_rt = np.full(n, -1, dtype=np.int8)
    news_events, news_mask = [], []
    for i, e in enumerate(events):
        ts[i] = int(e.created_at.timestamp())
        author[i] = pos[e.author_id]
        m = mask_of(e.text)
        if e.kind == "retweet":
            kind[i] = 1
            target[i] = pos[e.retweeted_author_id]
            if config.match_retweeted_text and e.retweeted_text:
                m |= mask_of(e.retweeted_text)
            if e.retweeted_urls is not None:
                news_rt[i] = 1 if any(canonicalize(u) is not None for u in e.retweeted_urls) else 0
        else:
            kind[i] = 0
            if e.urls:
                news_events.append(e)
                news_mask.append(m)
        tmask[i] = m
    return CorpusIndex(users, names, ts, kind, author, target, tmask, news_rt, news_events,
                       np.array(news_mask, dtype=np.uint64), parsed, rejected, errors)


def _save_index(index: CorpusIndex, where: Path) -> None:
    tmp = where.with_name(where.name + ".tmp")
    tmp.mkdir(parents=True, exist_ok=True)
    for name in _COLUMNS:
        np.save(tmp / f"{name}.npy", getattr(index, name), allow_pickle=False)
    (tmp / "users.json").write_text(json.dumps(index.users), encoding="utf-8")
    meta = {"version": INDEX_VERSION, "topics": index.topics, "parsed": index.parsed,
            "rejected": index.rejected, "errors": index.errors}
    (tmp / "meta.json").write_text(json.dumps(meta, ensure_ascii=False, indent=1), encoding="utf-8")
    with open(tmp / "news.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for e in index.news_events:
            fh.write(event_to_json(e) + "\n")
    os.replace(tmp, where)


def _load_saved_index(where: Path) -> CorpusIndex:
    cols = {name: np.load(where / f"{name}.npy", allow_pickle=False) for name in _COLUMNS}
    users = json.loads((where / "users.json").read_text(encoding="utf-8"))
    meta = json.loads((where / "meta.json").read_text(encoding="utf-8"))
    with open(where / "news.jsonl", "rb") as fh:
        news, _ = parse_events(fh)
    return CorpusIndex(users, meta["topics"], news_events=news, parsed=meta["parsed"], rejected=meta["rejected"],
                       errors=meta["errors"], **cols)


_INDEX_MEMO: dict[str, CorpusIndex] = {}


def clear_memo() -> None:
    """Forget the in-process corpus index (the on-disk cache is untouched)."""
    _INDEX_MEMO.clear()


def load_index(config: RunConfig, topics: Sequence[TopicConfig] | None = None) -> CorpusIndex:
    topics = load_topics(config) if topics is None else topics
    paths = [Path(config.resolve(p)) for p in config.inputs]
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise ValidationFailure([{"where": p, "message": "input file not found"} for p in missing])
    key = _index_key(config, topics, paths)
    if key in _INDEX_MEMO:
        return _INDEX_MEMO[key]
    where = config.cache / f"corpus-{key}"
    if (where / "meta.json").exists():
        index = _load_saved_index(where)
    else:
        index = build_index(config, topics)
        try:
            _save_index(index, where)
        except OSError as exc:  # a read-only cache is not fatal
            log.warning("could not write corpus cache: %s", exc)
    _INDEX_MEMO.clear()
    _INDEX_MEMO[key] = index
    return index


# -- event selection and graphs -----------------------------------------------------------

def _period_bounds(period: StudyPeriod, tz: str) -> tuple[int, int]:
    w = window_bounds("days:1", StudyPeriod(period.name, period.start, period.start), tz)[0]
    last = window_bounds("days:1", StudyPeriod(period.name, period.end, period.end), tz)[0]
    return int(w.start.timestamp()), int(last.end.timestamp())


def candidate_ids(config: RunConfig) -> set[str]:
    if not config.seeds:
        return set()
    return {s.author_id for s in load_seeds(config.resolve(config.seeds))}


def select_retweets(index: CorpusIndex, topic: str, period: StudyPeriod, config: RunConfig,
                    subset: str = "all", news_only: bool = False, candidates: set[str] | None = None) -> np.ndarray:
    lo, hi = _period_bounds(period, config.timezone)
    sel = (index.kind == 1) & (index.ts >= lo) & (index.ts < hi) & ((index.topic_mask & index.topic_bit(topic)) != 0)
    if subset != "all":
        cand = np.zeros(len(index.users), dtype=bool)
        cand[index.user_index(candidates or set())] = True
        is_cand = cand[index.author]
        sel &= is_cand if subset == "candidates_only" else ~is_cand
    rows = np.flatnonzero(sel)
    if news_only:
        flags = index.news_rt[rows]
        if (flags < 0).any():
            raise UnsupportedInputError(
                "the retweets-with-news variant needs retweeted_urls on every retweet; "
                f"{int((flags < 0).sum())} selected retweets lack it")
        rows = rows[flags == 1]
    return rows


def graph_from_rows(index: CorpusIndex, rows: np.ndarray, window=None) -> EndorsementGraph:
    a = index.author[rows].astype(np.int64)
    b = index.target[rows].astype(np.int64)
    loops = int((a == b).sum())
    keep = a != b
    U = len(index.users)
    keys, counts = np.unique(a[keep] * U + b[keep], return_counts=True)
    users = index.users
    edges = {(users[k // U], users[k % U]): int(c) for k, c in zip(keys.tolist(), counts.tolist())}
    nodes = frozenset(x for e in edges for x in e)
    return EndorsementGraph(window, nodes, edges, int(counts.sum()), loops)


def window_graphs(index: CorpusIndex, rows: np.ndarray, period: StudyPeriod, config: RunConfig):
    windows = window_bounds(config.windows, period, config.timezone)
    starts = np.array([int(w.start.timestamp()) for w in windows], dtype=np.int64)
    widx = np.searchsorted(starts, index.ts[rows], side="right") - 1
    return [graph_from_rows(index, rows[widx == i], w) for i, w in enumerate(windows)]


# -- cached model selection -----------------------------------------------------------------

def graph_digest(graph: EndorsementGraph) -> str:
    h = hashlib.sha256()
    for (u, v), m in sorted(graph.edges.items()):
        h.update(f"{u}\t{v}\t{m}\n".encode())
    return h.hexdigest()


def _selection_key(graph: EndorsementGraph, config: RunConfig) -> str:
    params = json.dumps({"B_max": config.B_max, "seed": config.seed, "restarts": config.restarts,
                         "binarize": config.binarize, "objective": OBJECTIVE_VERSION, "search": SEARCH_VERSION, "rng": RNG_VERSION},
                        sort_keys=True)
    return hashlib.sha256((graph_digest(graph) + params).encode()).hexdigest()[:32]


def _result_to_json(res: ModelSelectionResult) -> dict:
    return {"chosen_B": res.chosen_B, "evidence_margin": None if math.isinf(res.evidence_margin) else res.evidence_margin,
            "per_B": {str(B): {"score": s, "assignment": dict(sorted(p.assignment.items()))}
                      for B, (p, s) in sorted(res.per_B.items())}}


def _result_from_json(d: dict) -> ModelSelectionResult:
    per_B = {int(B): (Partition(v["assignment"], int(B), score=v["score"]), v["score"]) for B, v in d["per_B"].items()}
    margin = math.inf if d["evidence_margin"] is None else d["evidence_margin"]
    return ModelSelectionResult(per_B, d["chosen_B"], margin)


def _fit_graph(graph: EndorsementGraph, config: RunConfig) -> EndorsementGraph:
    return binarized(graph) if config.binarize else graph


def _select(args) -> dict:
    graph, B_max, seed, restarts = args
    return _result_to_json(select_model(graph, B_max, seed, restarts))


def weekly_selections(graphs: Sequence[EndorsementGraph], config: RunConfig) -> list[ModelSelectionResult]:
    cache = config.cache / "select"
    cache.mkdir(parents=True, exist_ok=True)
    keys = [_selection_key(g, config) for g in graphs]
    results: dict[int, dict] = {}
    todo = []
    for i, k in enumerate(keys):
        f = cache / f"{k}.json"
        if f.exists():
            results[i] = json.loads(f.read_text(encoding="utf-8"))
        else:
            todo.append(i)
    jobs = [(_fit_graph(graphs[i], config), config.B_max, config.seed, config.restarts) for i in todo]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            fresh = list(pool.map(_select, jobs))
    else:
        fresh = [_select(j) for j in jobs]
    for i, d in zip(todo, fresh):
        results[i] = d
        (cache / f"{keys[i]}.json").write_text(json.dumps(d, sort_keys=True), encoding="utf-8")
    return [_result_from_json(results[i]) for i in range(len(graphs))]


# -- outputs -----------------------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


def run_metadata(config: RunConfig, command: str, extra: Mapping | None = None) -> dict:
    meta = {
        "command": command, "version": __version__, "config": config.metadata(),
        "rng": RNG_VERSION, "objective": OBJECTIVE_VERSION, "search": SEARCH_VERSION,
        "log_omega_exact": {"two_rows_max_n": TWO_ROW_EXACT_N, "three_rows_max_n": THREE_ROW_EXACT_N,
                            "any_shape_max_n": SMALL_EXACT_N},
    }
    if extra:
        meta.update(extra)
    return meta


# -- commands -------------------------------------------------------------------------------

def cmd_validate(config: RunConfig) -> dict:
    """Check paths, topic configs, seeds and every input record.  Returns the report."""
    findings: list[dict] = []
    topics = None
    try:
        topics = load_topics(config)
        if config.parties_topic not in {t.topic_id for t in topics}:
            findings.append({"where": "topics", "message": f"no {config.parties_topic!r} topic configured"})
    except (ConfigError, OSError, FileNotFoundError) as exc:
        findings.append({"where": "topics", "message": str(exc)})
    if config.seeds:
        try:
            load_seeds(config.resolve(config.seeds))
        except FileNotFoundError:
            findings.append({"where": "seeds", "message": f"seed file not found: {config.seeds}"})
        except (ValueError, OSError) as exc:
            findings.append({"where": "seeds", "message": str(exc)})
    if config.journalism_keywords:
        try:
            load_keyword_list(config.resolve(config.journalism_keywords))
        except (ConfigError, OSError) as exc:
            findings.append({"where": "journalism_keywords", "message": str(exc)})
    summary: dict[str, Any] = {}
    missing = [p for p in config.inputs if not Path(config.resolve(p)).exists()]
    findings.extend({"where": p, "message": "input file not found"} for p in missing)
    if topics is not None and not missing:
        index = load_index(config, topics)
        findings.extend(index.errors)
        summary = {"events": index.parsed, "rejected": index.rejected, "users": len(index.users),
                   "retweets": int((index.kind == 1).sum()), "originals": int((index.kind == 0).sum()),
                   "originals_with_urls": len(index.news_events),
                   "per_topic": {t: int(((index.topic_mask >> np.uint64(i)) & np.uint64(1)).sum())
                                 for i, t in enumerate(index.topics)}}
    report = {"clean": not findings, "findings": findings, "summary": summary}
    _write_json(config.out / "validation.json", report)
    _write_json(config.out / "meta" / "validate.json", run_metadata(config, "validate"))
    return report


def _partition_path(config: RunConfig, period: str, kind: str) -> Path:
    return config.out / "groups" / f"{period}_{kind}.csv"


def cmd_infer_groups(config: RunConfig) -> dict:
    topics = load_topics(config)
    if config.parties_topic not in {t.topic_id for t in topics}:
        raise ConfigError(f"no {config.parties_topic!r} topic in the topic configuration; "
                          "add it or point parties_keywords at a keyword file")
    index = load_index(config, topics)
    seeds = load_seeds(config.resolve(config.seeds)) if config.seeds else []
    summary = {}
    for period in config.periods:
        rows = select_retweets(index, config.parties_topic, period.study, config)
        graph = graph_from_rows(index, rows)
        fit = fit_reference_partitions(_fit_graph(graph, config), seed=config.seed, restarts=config.restarts)
        inst, ideo = fit.institutional, fit.ideological
        notes = []
        if seeds:
            gov = set(period.government_parties)
            bloc_map = {s.party: ("Government" if s.party in gov else "Opposition")
                        for s in seeds if s.bloc != "Minor"}
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", LabelTieWarning)
                try:
                    inst = label_groups(inst, seeds, bloc_map=bloc_map, display={})
                    ideo = label_groups(ideo, seeds)
                except InferenceError as exc:
                    notes.append(str(exc))
            notes.extend(str(w.message) for w in caught)
        else:
            notes.append("no seed accounts configured; groups left unlabeled")
        _partition_path(config, period.name, "x").parent.mkdir(parents=True, exist_ok=True)
        for kind, part in (("institutional", inst), ("ideological", ideo)):
            write_partition(part, _partition_path(config, period.name, kind), seed=config.seed,
                            extra={"period": period.name, "restarts": config.restarts})
        summary[period.name] = {
            "nodes": len(graph.nodes), "events": graph.event_count, "self_loops": graph.self_loops,
            "institutional": {"score": inst.score, "margin_vs_B1": fit.institutional_margin,
                              "labels": inst.group_names, "sizes": inst.sizes()},
            "ideological": {"score": ideo.score, "margin_vs_B1": fit.ideological_margin,
                            "labels": ideo.group_names, "sizes": ideo.sizes()},
            "notes": notes,
        }
    _write_json(config.out / "groups" / "summary.json", summary)
    _write_json(config.out / "meta" / "infer-groups.json", run_metadata(config, "infer-groups"))
    return summary


def _read_references(config: RunConfig, period: str) -> tuple[Partition, Partition]:
    paths = [_partition_path(config, period, k) for k in ("institutional", "ideological")]
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise FileNotFoundError(f"partition files missing ({', '.join(missing)}); run 'polarscope infer-groups' first")
    return read_partition(paths[0]), read_partition(paths[1])


def _topic_weeks(config: RunConfig, index: CorpusIndex, topic: str, period: Period, candidates):
    rows = select_retweets(index, topic, period.study, config, subset=config.filter_mode,
                           news_only=config.retweets_with_news, candidates=candidates)
    graphs = window_graphs(index, rows, period.study, config)
    return graphs, weekly_selections(graphs, config)


def _variant_tag(config: RunConfig) -> str:
    parts = []
    if config.subset != "all":
        parts.append(config.subset)
    if config.retweets_with_news:
        parts.append("news")
    if config.windows != "weekly":
        parts.append(config.windows.replace(":", ""))
    return ("_" + "_".join(parts)) if parts else ""


def cmd_trends(config: RunConfig) -> list[Path]:
    topics = load_topics(config)
    index = load_index(config, topics)
    candidates = candidate_ids(config)
    written = []
    for period in config.periods:
        institutional, ideological = _read_references(config, period.name)
        for topic in analysis_topics(config, topics):
            graphs, results = _topic_weeks(config, index, topic, period, candidates)
            series = polarization_series(topic, graphs, institutional, ideological, results)
            path = config.out / "trends" / f"{period.name}_{topic}{_variant_tag(config)}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            write_trends_csv([series], ideological.group_names, path)
            written.append(path)
    _write_json(config.out / "meta" / f"trends{_variant_tag(config)}.json", run_metadata(config, "trends"))
    return written


def cmd_align(config: RunConfig) -> list[Path]:
    topics = load_topics(config)
    index = load_index(config, topics)
    candidates = candidate_ids(config)
    written = []
    for period in config.periods:
        entries = []
        for topic in analysis_topics(config, topics):
            graphs, results = _topic_weeks(config, index, topic, period, candidates)
            entries.extend(AlignmentEntry(topic, g.window.label, r) for g, r in zip(graphs, results))
        cells = alignment_matrix(entries, config.min_overlap)
        path = config.out / "alignment" / f"{period.name}{_variant_tag(config)}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_alignment_csv(cells, path)
        written.append(path)
    _write_json(config.out / "meta" / f"align{_variant_tag(config)}.json",
                run_metadata(config, "align", {"min_overlap": config.min_overlap}))
    return written


def cmd_newsflow(config: RunConfig) -> list[Path]:
    topics = load_topics(config)
    index = load_index(config, topics)
    candidates = candidate_ids(config)
    journalism = load_keyword_list(config.resolve(config.journalism_keywords)) if config.journalism_keywords else []
    out = config.out / "newsflow"
    out.mkdir(parents=True, exist_ok=True)
    tag = _variant_tag(config)
    canonicalize = config.outlet_filter()
    outlet_rows = {"": [], "_journalism": []}
    counters = {}
    written = []
    ts = np.array([int(e.created_at.timestamp()) for e in index.news_events], dtype=np.int64)
    for period in config.periods:
        _, ideological = _read_references(config, period.name)
        lo, hi = _period_bounds(period.study, config.timezone)
        for topic in analysis_topics(config, topics):
            bit = index.topic_bit(topic)
            sel = np.flatnonzero((ts >= lo) & (ts < hi) & ((index.news_mask & bit) != 0))
            events = [index.news_events[i] for i in sel.tolist()]
            if config.filter_mode != "all":
                want = config.filter_mode == "candidates_only"
                events = [e for e in events if (e.author_id in candidates) == want]
            subject, targeting = split_journalism(events, journalism)
            for suffix, evs in (("", subject), ("_journalism", targeting)):
                graph = build_user_news_graph(evs, canonicalize=canonicalize)
                counters[f"{period.name}/{topic}{suffix}"] = {
                    "tweets": len(evs), "edges": len(graph.edges), "articles": len(graph.articles),
                    "rejected_urls": graph.rejected_urls, "missing_sentiment": graph.missing_sentiment}
                outlet_rows[suffix].extend(outlet_table(graph, ideological, topic, period.name, config.top_outlets))
                stem = f"{period.name}_{topic}{suffix}{tag}"
                write_viral_csv(graph, ideological, config.top_viral, out / f"viral_{stem}.csv")
                top = top_viral_news(graph, config.top_viral) if graph.articles else []
                write_breakdowns_json([group_sentiment_breakdown(graph, ideological, k) for k, _ in top],
                                      out / f"breakdown_{stem}.json")
                written += [out / f"viral_{stem}.csv", out / f"breakdown_{stem}.json"]
    for suffix, rows in outlet_rows.items():
        write_outlets_csv(rows, out / f"outlets{suffix}{tag}.csv")
        written.append(out / f"outlets{suffix}{tag}.csv")
    _write_json(out / f"counters{tag}.json", counters)
    _write_json(config.out / "meta" / f"newsflow{tag}.json", run_metadata(config, "newsflow"))
    return written
