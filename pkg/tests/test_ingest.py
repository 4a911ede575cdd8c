import gzip
import io
import json
from datetime import date, datetime, timezone

import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from polarscope.ingest import (ConfigError, InvalidEventError, StudyPeriod, TopicConfig, WindowScheme, check_periods,
                               event_from_dict, event_to_dict, event_topics, fold, load_topic_configs, match_topics,
                               parse_events, read_events, split_journalism, window_bounds, window_events,
                               write_events)



def rec(i, **kw):
    base = {"id": str(i), "created_at": "2019-01-08T10:00:00Z", "author_id": "a", "text": "hei", "kind": "original"}
    base.update(kw)
    return base


def lines(*records):
    return io.BytesIO("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in records).encode())


def test_parse_rejects_per_line_and_keeps_first_duplicate():
    src = lines(rec(1), "{not json", rec(2, kind="quote"), rec(1, text="second"),
                rec(3, kind="retweet"), rec(4, like_count=-1), rec(5, created_at="2019-01-08T10:00:00"),
                rec(6, kind="retweet", retweeted_author_id="b", retweeted_status_id="9"))
    events, report = parse_events(src)
    assert [e.id for e in events] == ["1", "6"]
    assert events[0].text == "hei"
    assert report.counts == (2, 6)
    assert [ln for ln, _ in report.errors] == [2, 3, 4, 5, 6, 7]


def test_bool_counts_and_non_utf8_rejected():
    src = io.BytesIO(json.dumps(rec(1, like_count=True)).encode() + b"\n" + b"\xff\xfe\n")
    events, report = parse_events(src)
    assert events == [] and report.rejected == 2


def test_timestamps_normalized_to_utc():
    e = event_from_dict(rec(1, created_at="2019-01-08T12:30:15.75+02:00"))
    assert e.created_at == datetime(2019, 1, 8, 10, 30, 15, tzinfo=timezone.utc)
    assert event_to_dict(e)["created_at"] == "2019-01-08T10:30:15Z"


def test_round_trip_jsonl_gz_and_csv(tmp_path):
    events, _ = parse_events(lines(
        rec(1, urls=["https://hs.fi/a"], sentiment="negative", like_count=3),
        rec(2, kind="retweet", retweeted_author_id="b", retweeted_status_id="1", retweeted_urls=[],
            retweeted_text="alkuperäinen")))
    path = tmp_path / "ev.jsonl"
    write_events(events, path)
    assert read_events(path)[0] == events
    with gzip.open(tmp_path / "ev.jsonl.gz", "wb") as fh:
        fh.write(path.read_bytes())
    assert read_events(tmp_path / "ev.jsonl.gz")[0] == events
    # retweeted_urls=[] (supplied, empty) must survive, unlike an absent field
    assert events[1].retweeted_urls == () and events[0].retweeted_urls is None
    csv_path = tmp_path / "ev.csv"
    csv_path.write_text('id,created_at,author_id,text,kind,urls,like_count\n'
                        '1,2019-01-08T10:00:00Z,a,"moi, maailma",original,"[""https://yle.fi/x""]",4\n'
                        '2,2019-01-08T10:00:00Z,a,x,original,,nope\n', encoding="utf-8")
    got, report = read_events(csv_path)
    assert report.counts == (1, 1)
    assert got[0].urls == ("https://yle.fi/x",) and got[0].like_count == 4 and got[0].text == "moi, maailma"


def test_fold_is_simple_case_folding():
    assert fold("MAAHANMUUTTO") == "maahanmuutto"
    assert fold("ÄÖÅ") == "äöå"
    assert fold("ΟΔΟΣ") == "οδοσ"
    assert len(fold("İ")) == 1


def test_topic_matching_is_substring_on_folded_text(tmp_path):
    configs = [TopicConfig("immigration", ("maahanmuutt", "MATU")), TopicConfig("climate", ("ilmasto",))]
    assert configs[0].keywords == ("maahanmuutt", "matu")
    assert match_topics("Maahanmuuttajat ja ILMASTOnmuutos", configs) == {"immigration", "climate"}
    assert match_topics("automatuunaus", configs) == {"immigration"}
    assert match_topics("", configs) == set()
    rt = event_from_dict(rec(1, kind="retweet", retweeted_author_id="b", retweeted_status_id="2", text="RT",
                             retweeted_text="ilmastokriisi"))
    assert event_topics(rt, configs) == {"climate"}
    assert event_topics(rt, configs, use_retweeted_text=False) == set()
    bad = tmp_path / "t.yaml"
    for doc in ["[1, 2]", "x: []", "x: [\"\"]", "x: nope", "x: [a\n"]:
        bad.write_text(doc)
        with pytest.raises(ConfigError):
            load_topic_configs(bad)


def test_table_a1_fixture():
    configs = load_topic_configs("builtin:topics_table_a1")
    cases = yaml.safe_load(open(__file__.replace("test_ingest.py", "data/topic_cases.yaml"), encoding="utf-8"))
    for case in cases["cases"] if isinstance(cases, dict) else cases:
        assert match_topics(case["text"], configs) == set(case["topics"]), case["text"]


@given(st.text(max_size=30), st.text(min_size=1, max_size=5))
def test_match_iff_folded_substring(text, kw):
    config = TopicConfig("t", (kw,))
    assert (match_topics(text, [config]) == {"t"}) == (fold(kw) in fold(text) and text != "")


def test_journalism_split_preserves_order():
    evs = [event_from_dict(rec(i, text=t)) for i, t in enumerate(["Toimittaja valehtelee", "vero", "MEDIA hiljaa"])]
    subject, journalism = split_journalism(evs, ["toimittaja", "media"])
    assert [e.id for e in subject] == ["1"] and [e.id for e in journalism] == ["0", "2"]
    assert split_journalism(evs, [])[0] == evs


def test_weekly_windows_follow_local_monday_midnight():
    period = StudyPeriod("p", date(2019, 3, 20), date(2019, 4, 3))
    wins = window_bounds("weekly", period, "Europe/Helsinki")
    assert [w.label for w in wins] == ["2019-03-18", "2019-03-25", "2019-04-01"]
    # DST switch on 2019-03-31 makes that week one hour shorter
    assert wins[1].end.timestamp() - wins[1].start.timestamp() == 7 * 86400 - 3600
    assert all(a.end == b.start for a, b in zip(wins, wins[1:]))


def test_bimonthly_and_custom_windows():
    four_years = StudyPeriod("p", date(2019, 4, 1), date(2023, 3, 31))
    assert len(window_bounds("bimonthly", four_years)) == 24
    assert len(window_bounds("days:10", StudyPeriod("q", date(2020, 1, 1), date(2020, 1, 25)))) == 3
    for bad in ["monthly", "days:0", "days:x"]:
        with pytest.raises(ConfigError):
            WindowScheme.parse(bad)


def test_window_events_drop_out_of_period_and_keep_empty():
    period = StudyPeriod("p", date(2019, 1, 7), date(2019, 1, 20))
    evs = [event_from_dict(rec(i, created_at=t)) for i, t in enumerate(
        ["2019-01-06T21:59:59Z", "2019-01-06T22:00:00Z", "2019-01-20T21:59:59Z", "2019-01-20T22:00:00Z"])]
    we = window_events(evs, "weekly", period, "Europe/Helsinki")
    assert we.dropped == 2
    assert [[e.id for e in bucket] for _, bucket in we] == [["1"], ["2"]]
    empty = window_events([], "weekly", period)
    assert len(empty) == 2


def test_periods():
    with pytest.raises(ConfigError):
        StudyPeriod("x", date(2020, 1, 2), date(2020, 1, 1))
    with pytest.raises(ConfigError):
        check_periods([StudyPeriod("a", date(2020, 1, 1), date(2020, 2, 1)),
                       StudyPeriod("b", date(2020, 2, 1), date(2020, 3, 1))])


def test_invalid_event_direct():
    with pytest.raises(InvalidEventError):
        event_from_dict(rec(1, kind="original", retweeted_author_id="b"))
    with pytest.raises(InvalidEventError):
        event_from_dict(rec(1, sentiment="angry"))
