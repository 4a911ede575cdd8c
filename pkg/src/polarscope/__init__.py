"""Structural polarization measurement over retweet and news-sharing event streams."""
from .contingency import log_omega
from .graphs import build_endorsement_graph, build_user_news_graph, participation
from .groups import Partition, infer_partition, label_groups, select_model
from .ingest import InteractionEvent, match_topics, parse_events, window_events
from .newsflow import group_sentiment_breakdown, negativity_share, node_centrality, top_viral_news, virality
from .polarization import aei, alignment_matrix, partisan_sorting_series, rmi
from .urls import canonicalize_url

__version__ = "0.1.0"
