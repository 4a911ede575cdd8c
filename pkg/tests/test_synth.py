import json

import numpy as np
import pytest

from polarscope.cli import main
from polarscope.graphs import build_endorsement_graph
from polarscope.ingest import read_events
from polarscope.synth import (PlantedStreamSpec, SpecError, apportion, gen_planted_retweet_stream,
                              oracle_count_tables)


def spec(**kw):
    base = dict(n_users=60, blocs=[("A", 20), ("B", 40)], weeks=2, events_per_week=400, p_in=0.6, p_out=0.05, seed=1)
    base.update(kw)
    return PlantedStreamSpec(**base)


def test_deterministic_and_seed_sensitive():
    e1, t1 = gen_planted_retweet_stream(spec())
    e2, t2 = gen_planted_retweet_stream(spec())
    e3, _ = gen_planted_retweet_stream(spec(seed=2))
    assert e1 == e2 and t1.assignment == t2.assignment
    assert e1 != e3
    assert len(e1) == 800 and all(e.author_id != e.retweeted_author_id for e in e1)
    assert t1.sizes() == [20, 40] and t1.labels == {0: "A", 1: "B"}


def test_assortativity_follows_propensities():
    events, truth = gen_planted_retweet_stream(spec(events_per_week=3000, weeks=1))
    a = truth.assignment
    within = np.mean([a[e.author_id] == a[e.retweeted_author_id] for e in events])
    # expected within share for a source in A: 0.6*19 / (0.6*19 + 0.05*40) and similarly for B
    assert 0.8 < within < 0.97


def test_weekly_schedule_and_news():
    events, _ = gen_planted_retweet_stream(spec(p_out_schedule=[0.05, 0.6], news_urls=["https://hs.fi/n"],
                                                news_fraction=0.5))
    weeks = sorted({e.created_at.isocalendar()[1] for e in events})
    assert len(weeks) == 2
    with_news = sum(bool(e.retweeted_urls) for e in events)
    assert 300 < with_news < 500


@pytest.mark.parametrize("bad", [dict(n_users=1, blocs=[("A", 1)]), dict(blocs=[("A", 30), ("B", 31)]),
                                 dict(p_in=1.5), dict(p_in=0, p_out=0), dict(p_out_schedule=[0.1]),
                                 dict(label_noise=1.0), dict(news_fraction=0.2),
                                 dict(blocs=[("A", 30), ("A", 30)]), dict(p_matrix=[[1, 0]])])
def test_spec_errors(bad):
    with pytest.raises(SpecError):
        gen_planted_retweet_stream(spec(**bad))


def test_disassortative_warns():
    with pytest.warns(UserWarning):
        gen_planted_retweet_stream(spec(p_in=0.01, p_out=0.5))


def test_apportion():
    assert apportion(10, [0.2, 0.6, 0.2]) == [2, 6, 2]
    assert apportion(3, [1 / 3, 1 / 3, 1 / 3]) == [1, 1, 1]
    assert apportion(2, [1 / 3, 1 / 3, 1 / 3]) == [1, 1, 0]
    assert sum(apportion(7, [0.15, 0.55, 0.3])) == 7


def test_oracle_counts():
    assert oracle_count_tables([2, 2], [2, 2]) == 3
    assert oracle_count_tables([1, 1, 1], [1, 1, 1]) == 6
    assert oracle_count_tables([3], [1, 2]) == 1


def test_cli_synth_planted_and_news(tmp_path):
    (tmp_path / "p.yaml").write_text("kind: planted\nn_users: 30\nblocs: [[A, 10], [B, 20]]\nweeks: 1\n"
                                     "events_per_week: 200\np_in: 0.5\np_out: 0.05\n")
    assert main(["synth", str(tmp_path / "p.yaml"), "--output", str(tmp_path / "out"), "--seed", "4"]) == 0
    meta = json.loads((tmp_path / "out" / "synth_meta.json").read_text())
    assert meta["seed"] == 4 and set(meta["files"]) == {"events", "truth"}
    events, report = read_events(tmp_path / "out" / "events.jsonl")
    assert report.rejected == 0 and len(build_endorsement_graph(events).nodes) <= 30
    (tmp_path / "n.yaml").write_text(
        "kind: news\npartition: out/truth.csv\narticles: [[https://hs.fi/a, hs.fi]]\n"
        "sentiment: {A: [0.5, 0.5, 0.0], B: [0.0, 1.0, 0.0]}\nshare_rate: {A: 1.0, B: 0.5}\n")
    assert main(["synth", str(tmp_path / "n.yaml"), "--output", str(tmp_path / "news")]) == 0
    news, _ = read_events(tmp_path / "news" / "events.jsonl")
    assert len(news) == 20
    (tmp_path / "bad.yaml").write_text("kind: cubic\n")
    assert main(["synth", str(tmp_path / "bad.yaml")]) == 1
    (tmp_path / "nopart.yaml").write_text("kind: news\narticles: []\n")
    assert main(["synth", str(tmp_path / "nopart.yaml")]) == 1
    assert main(["synth", str(tmp_path / "missing.yaml")]) == 1
