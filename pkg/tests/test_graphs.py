from datetime import datetime, timezone

import pytest

from polarscope.graphs import (UnsupportedInputError, binarized, build_endorsement_graph, build_user_news_graph,
                               filter_accounts, graph_from_edges, load_seeds, participation,
                               restrict_to_news_retweets, write_seeds, SeedAccount)
from polarscope.groups import Partition
from polarscope.ingest import event_from_dict


def rt(i, a, b, **kw):
    return event_from_dict({"id": str(i), "created_at": "2019-01-08T10:00:00Z", "author_id": a, "text": "",
                            "kind": "retweet", "retweeted_author_id": b, "retweeted_status_id": f"s{i}", **kw})


def og(i, a, urls, t="2019-01-08T10:00:00Z", **kw):
    return event_from_dict({"id": str(i), "created_at": t, "author_id": a, "text": "", "kind": "original",
                            "urls": urls, **kw})


def test_multigraph_counts_and_self_loops():
    g = build_endorsement_graph([rt(1, "a", "b"), rt(2, "a", "b"), rt(3, "b", "a"), rt(4, "c", "c"),
                                 og(5, "d", [])])
    assert g.edges == {("a", "b"): 2, ("b", "a"): 1}
    assert g.nodes == {"a", "b"} and g.event_count == 3 and g.self_loops == 1
    assert binarized(g).edges == {("a", "b"): 1, ("b", "a"): 1}
    assert graph_from_edges([("a", "b"), ("a", "b"), ("b", "a"), ("c", "c")]).edges == g.edges
    assert g.scaled(3).event_count == 9


def test_participation_counts_nonpartisans():
    g = graph_from_edges([("a", "b"), ("c", "x"), ("y", "a")])
    part = Partition({"a": 0, "b": 1, "c": 1, "z": 0}, 2, labels={0: "L", 1: "R"})
    p = participation(g, part)
    assert p.counts == {"L": 1, "R": 2}
    assert p.nonpartisan_count == 2 and p.active_count == 5
    assert p.nonpartisan_share == pytest.approx(0.4)
    assert participation(graph_from_edges([]), part).nonpartisan_share == 0.0


def test_user_news_graph():
    events = [
        og(1, "u1", ["https://www.hs.fi/a?utm_source=x", "https://hs.fi/a", "not a url"], like_count=1,
           sentiment="negative"),
        og(2, "u2", ["https://hs.fi/a"], t="2019-01-07T09:00:00Z", retweet_count=2),
        og(3, "u3", []),
        rt(4, "u4", "u1"),
    ]
    g = build_user_news_graph(events)
    assert g.users == {"u1", "u2"}
    assert list(g.articles) == ["hs.fi/a"]
    assert g.articles["hs.fi/a"].first_seen == datetime(2019, 1, 7, 9, tzinfo=timezone.utc)
    assert [(e.user_id, e.sentiment, e.virality) for e in g.edges] == [("u1", "negative", 30), ("u2", "neutral", 40)]
    assert g.rejected_urls == 1 and g.missing_sentiment == 1


def test_news_retweets_need_retweeted_urls():
    kept = restrict_to_news_retweets([rt(1, "a", "b", retweeted_urls=["https://hs.fi/a"]),
                                      rt(2, "a", "b", retweeted_urls=[]), og(3, "a", ["https://hs.fi/a"])])
    assert [e.id for e in kept] == ["1"]
    with pytest.raises(UnsupportedInputError):
        restrict_to_news_retweets([rt(1, "a", "b")])


def test_seed_file_round_trip_and_errors(tmp_path):
    seeds = [SeedAccount("@x", "1", "PS", "ConservativeRight", 2019), SeedAccount("@y", "2", "LIIK", "Minor", 2023)]
    path = tmp_path / "seeds.csv"
    write_seeds(seeds, path)
    assert load_seeds(path) == seeds
    for body in ["handle,author_id\n", "handle,author_id,party,bloc,election_year\n@x,1,PS,Green,2019\n",
                 "handle,author_id,party,bloc,election_year\n@x,1,PS,Minor,2015\n",
                 "handle,author_id,party,bloc,election_year\n@x,,PS,Minor,2019\n"]:
        path.write_text(body)
        with pytest.raises(ValueError):
            load_seeds(path)


def test_account_filters():
    events = [rt(1, "cand", "b"), rt(2, "other", "cand")]
    seeds = [SeedAccount("@c", "cand", "PS", "ConservativeRight", 2019)]
    assert [e.id for e in filter_accounts(events, "candidates_only", seeds)] == ["1"]
    assert [e.id for e in filter_accounts(events, "exclude_candidates", {"cand"})] == ["2"]
    assert filter_accounts(events, "all") == events
    with pytest.raises(ValueError):
        filter_accounts(events, "some")
