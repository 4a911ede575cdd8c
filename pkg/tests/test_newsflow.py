import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarscope.graphs import build_user_news_graph
from polarscope.groups import Partition
from polarscope.ingest import event_from_dict
from polarscope.newsflow import (NONPARTISAN, group_sentiment_breakdown, negativity_share, node_centrality,
                                 outlet_table, round_to_thousands, top_viral_news, virality, write_breakdowns_json,
                                 write_outlets_csv, write_viral_csv)
from polarscope.synth import NewsStreamSpec, gen_news_sharing_events


def test_virality_weights():
    assert virality(1, 0, 0) == 30 and virality(0, 1, 0) == 20 and virality(0, 0, 1) == 1
    assert virality(10**15, 10**15, 10**15) == 51 * 10**15
    with pytest.raises(ValueError):
        virality(-1, 0, 0)
    with pytest.raises(TypeError):
        virality(True, 0, 0)


@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 1000))
def test_virality_linear_and_monotone(l, r, p, d):
    assert virality(l + d, r, p) - virality(l, r, p) == 30 * d
    assert virality(l, r + d, p) >= virality(l, r, p)


def test_round_to_thousands():
    assert round_to_thousands(77_600) == 78
    assert round_to_thousands(1_499) == 1 and round_to_thousands(1_500) == 2 and round_to_thousands(0) == 0


def og(i, user, url, sentiment, likes=0, outlet_host="hs.fi"):
    return event_from_dict({"id": str(i), "created_at": "2021-03-01T10:00:00Z", "author_id": user, "text": "",
                            "kind": "original", "urls": [f"https://{outlet_host}/{url}"],
                            "sentiment": sentiment, "like_count": likes})


PART = Partition({"a": 0, "b": 0, "c": 1}, 2, labels={0: "L", 1: "R"})


def sample_graph():
    return build_user_news_graph([
        og(1, "a", "x", "negative", 2), og(2, "b", "x", "positive", 1), og(3, "c", "x", "negative", 3),
        og(4, "z", "x", "neutral", 1), og(5, "a", "y", "neutral", 0, "yle.fi"), og(6, "c", "y", "neutral", 10, "yle.fi"),
        og(7, "a", "w", "neutral", 0),
    ])


def test_centrality_and_ranking():
    g = sample_graph()
    cent = node_centrality(g)
    assert cent["articles"] == {"hs.fi/w": 0, "hs.fi/x": 210, "yle.fi/y": 300}
    assert cent["users"]["c"] == 390
    assert top_viral_news(g, 2) == [("yle.fi/y", 300), ("hs.fi/x", 210)]
    with pytest.raises(ValueError):
        top_viral_news(g, 0)


def test_breakdown_and_negativity():
    g = sample_graph()
    b = group_sentiment_breakdown(g, PART, "hs.fi/x")
    assert list(b.groups) == ["L", "R", NONPARTISAN]
    assert (b["L"].tweet_count, b["L"].neg_count, b["L"].pos_count) == (2, 1, 1)
    assert b["R"].virality_neg == 90 and b[NONPARTISAN].virality_neutral == 30
    assert b.virality_total == 210
    assert negativity_share(b, "R") == pytest.approx(90 / 210)
    empty = group_sentiment_breakdown(g, PART, "hs.fi/w")
    assert negativity_share(empty, "L") is None
    with pytest.raises(KeyError):
        group_sentiment_breakdown(g, PART, "nope")


def test_outlet_tables():
    g = sample_graph()
    rows = outlet_table(g, PART, "t", "p")
    assert [(r.group, r.outlet, r.count, r.rank) for r in rows] == [
        ("L", "hs.fi", 2, 1), ("L", "yle.fi", 1, 2), ("R", "hs.fi", 1, 1), ("R", "yle.fi", 1, 2)]
    shares = outlet_table(g, PART, per_share=True, include_nonpartisan=True, top_n=1)
    assert [(r.group, r.outlet, r.count) for r in shares] == [("L", "hs.fi", 3), ("R", "hs.fi", 1),
                                                              (NONPARTISAN, "hs.fi", 1)]


def test_writers(tmp_path):
    g = sample_graph()
    write_viral_csv(g, PART, 5, tmp_path / "viral.csv")
    lines = (tmp_path / "viral.csv").read_text().splitlines()
    assert len(lines) == 4 and lines[1].startswith("1,yle.fi/y,yle.fi,300,")
    write_outlets_csv(outlet_table(g, PART), tmp_path / "outlets.csv")
    assert (tmp_path / "outlets.csv").read_text().startswith("period,topic,group,outlet,unique_articles,rank\n")
    bds = [group_sentiment_breakdown(g, PART, k) for k in ("hs.fi/x", "hs.fi/w")]
    write_breakdowns_json(bds, tmp_path / "b.json", {"topic": "t"})
    doc = json.loads((tmp_path / "b.json").read_text())
    assert doc["topic"] == "t"
    assert doc["articles"][0]["negativity_share"]["R"] == pytest.approx(90 / 210)
    assert doc["articles"][1]["negativity_share"]["L"] is None


def test_generated_sharing_matches_quotas():
    users = {f"l{i}": 0 for i in range(40)} | {f"r{i}": 1 for i in range(60)}
    part = Partition(users, 2, labels={0: "LiberalLeft", 1: "ConservativeRight"})
    spec = NewsStreamSpec(articles=[("https://hs.fi/a1", "hs.fi"), ("https://mvlehti.net/a2", "mvlehti.net")],
                          sentiment={"LiberalLeft": (0.2, 0.6, 0.2), "ConservativeRight": (0.7, 0.2, 0.1)},
                          share_rate={"LiberalLeft": 0.5, "ConservativeRight": 0.5},
                          outlet_affinity={"LiberalLeft": {"mvlehti.net": 0.1}}, seed=3)
    g = build_user_news_graph(gen_news_sharing_events(spec, part))
    b = group_sentiment_breakdown(g, part, "hs.fi/a1")
    assert b["LiberalLeft"].tweet_count == 20 and b["ConservativeRight"].tweet_count == 30
    assert (b["ConservativeRight"].neg_count, b["ConservativeRight"].neutral_count) == (21, 6)
    assert group_sentiment_breakdown(g, part, "mvlehti.net/a2")["LiberalLeft"].tweet_count == 2
