"""Virality-weighted sentiment of shared news, split by group.

Run: python demos/news_sentiment.py
"""
from polarscope.graphs import build_user_news_graph
from polarscope.groups import Partition
from polarscope.newsflow import (group_sentiment_breakdown, negativity_share, outlet_table, round_to_thousands,
                                 top_viral_news)
from polarscope.synth import NewsStreamSpec, gen_news_sharing_events

blocs = {"ConservativeRight": 150, "LiberalLeft": 200, "ModerateRight": 150}
users, g = {}, 0
for g, (name, size) in enumerate(blocs.items()):
    users.update({f"{name[:3].lower()}{i}": g for i in range(size)})
partition = Partition(users, len(blocs), labels=dict(enumerate(blocs)))

# %% one sharp story and two ordinary ones; negative shares travel further
spec = NewsStreamSpec(
    articles=[("https://www.hs.fi/politiikka/art-1", "hs.fi"), ("https://yle.fi/uutiset/3-2", "yle.fi"),
              ("https://mvlehti.net/2021/03/x?utm_source=tw", "mvlehti.net")],
    sentiment={"ConservativeRight": (0.7, 0.25, 0.05), "LiberalLeft": (0.15, 0.6, 0.25),
               "ModerateRight": (0.2, 0.6, 0.2)},
    share_rate={"ConservativeRight": 0.4, "LiberalLeft": 0.3, "ModerateRight": 0.2},
    outlet_affinity={"LiberalLeft": {"mvlehti.net": 0.05}, "ModerateRight": {"mvlehti.net": 0.1}},
    sentiment_boost={"negative": 3.0, "neutral": 1.0, "positive": 1.0}, seed=2)
graph = build_user_news_graph(gen_news_sharing_events(spec, partition))

for key, cent in top_viral_news(graph, 3):
    b = group_sentiment_breakdown(graph, partition, key)
    shares = ", ".join(f"{n}: {negativity_share(b, n):.2f}" for n in blocs)
    print(f"{key}  virality {round_to_thousands(cent)}k  negative share by group: {shares}")

# %% outlets per group, counting each article once per group
for row in outlet_table(graph, partition, top_n=2):
    print(row.group, row.rank, row.outlet, row.count)
