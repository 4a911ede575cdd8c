import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarscope.graphs import graph_from_edges
from polarscope.ingest import StudyPeriod, window_bounds
from polarscope.groups import ModelSelectionResult, Partition
from polarscope.polarization import (AlignmentEntry, aei, aei_from_counts, alignment_matrix, polarization_series,
                                     rmi, rmi_detail, write_alignment_csv, write_trends_csv)
from polarscope.synth import oracle_count_tables


def oracle_rmi(a, b):
    users = sorted(set(a) & set(b))
    ka, kb = sorted(set(a[u] for u in users)), sorted(set(b[u] for u in users))
    T = np.zeros((len(ka), len(kb)))
    for u in users:
        T[ka.index(a[u]), kb.index(b[u])] += 1
    n = len(users)

    def m(tab):
        r, c = tab.sum(1), tab.sum(0)
        nz = tab > 0
        info = (tab[nz] * np.log(n * tab[nz] / np.outer(r, c)[nz])).sum()
        return info - math.log(oracle_count_tables([int(x) for x in r], [int(x) for x in c]))

    return 2 * m(T) / (m(np.diag(T.sum(1))) + m(np.diag(T.sum(0))))


def test_aei_boundaries():
    assert aei_from_counts(10, 0, 3, 3) == 1.0
    assert aei_from_counts(0, 10, 3, 3) == -1.0
    assert aei_from_counts(0, 0, 3, 3) is None
    # equal densities: 12 in over 12 ordered pairs, 18 out over 18 pairs
    assert aei_from_counts(12, 18, 3, 3) == pytest.approx(0.0, abs=1e-15)
    assert aei_from_counts(0, 4, 1, 1) == -1.0
    with pytest.raises(ValueError):
        aei_from_counts(1, 1, 0, 2)


def test_aei_on_graph_by_label():
    g = graph_from_edges({("a", "b"): 4, ("c", "d"): 2, ("a", "c"): 1})
    p = Partition({"a": 0, "b": 0, "c": 1, "d": 1}, 2, labels={0: "L", 1: "R"})
    d_in, d_out = 6 / 4, 1 / 8
    assert aei(g, p, "L", "R") == pytest.approx((d_in - d_out) / (d_in + d_out))
    assert aei(g, p, 0, 1) == aei(g, p, "R", "L")


def test_rmi_basic_properties():
    a = {str(i): i % 3 for i in range(12)}
    assert rmi(a, a) == pytest.approx(1.0)
    assert rmi(a, {"0": 0}) is None
    assert rmi_detail(a, {u: 0 for u in a}).value == 0.0
    b = {str(i): i // 6 for i in range(12)}
    assert rmi(a, b) == pytest.approx(rmi(b, a))
    # independent labelings: negative raw value, clamped to zero
    assert oracle_rmi(a, b) < 0 and rmi(a, b) == 0.0
    nested = {str(i): i % 6 for i in range(12)}
    assert 0 < rmi(a, nested) < 1
    assert rmi(a, nested) == pytest.approx(oracle_rmi(a, nested), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=2, max_size=13))
def test_rmi_against_oracle_and_bounds(pairs):
    a = {str(i): x for i, (x, _) in enumerate(pairs)}
    b = {str(i): y for i, (_, y) in enumerate(pairs)}
    d = rmi_detail(a, b)
    assert 0.0 <= d.value <= 1.0 and d.exact
    if len(set(a.values())) > 1 and len(set(b.values())) > 1:
        raw = oracle_rmi(a, b)
        assert d.value == pytest.approx(min(1.0, max(0.0, raw)), abs=1e-9)
    relabeled = {u: 7 - g for u, g in a.items()}
    assert rmi(relabeled, b) == pytest.approx(d.value, abs=1e-12)


def result(assignment, B):
    p = Partition(assignment, B)
    return ModelSelectionResult({B: (p, 0.0)}, B, 1.0)


def test_alignment_symmetry_and_undefined_cells():
    users = [str(i) for i in range(30)]
    r1 = result({u: i % 2 for i, u in enumerate(users)}, 2)
    r2 = result({u: i % 3 for i, u in enumerate(users)}, 3)
    r_small = result({u: i % 2 for i, u in enumerate(users[:5])}, 2)
    r_one = result({u: 0 for u in users}, 1)
    entries = [AlignmentEntry("t1", "w1", r1), AlignmentEntry("t2", "w1", r2), AlignmentEntry("t3", "w1", r_small),
               AlignmentEntry("t4", "w1", r_one), AlignmentEntry("t5", "w1", None)]
    cells = alignment_matrix(entries, min_overlap=20)
    M = {(c.topic_a, c.topic_b): c for c in cells}
    assert len(cells) == 25
    for (x, y), c in M.items():
        assert c.value == M[y, x].value and c.overlap_n == M[y, x].overlap_n
    assert M["t1", "t1"].value == 1.0
    assert M["t1", "t2"].defined and M["t1", "t2"].overlap_n == 30
    assert not M["t1", "t3"].defined and M["t1", "t3"].overlap_n == 5
    assert not M["t1", "t4"].defined and not M["t5", "t5"].defined


def test_series_and_csv(tmp_path):
    ideo = Partition({"a": 0, "b": 0, "c": 1, "d": 1, "e": 2}, 3, labels={0: "X", 1: "Y", 2: "Z"})
    inst = Partition({"a": 0, "b": 0, "c": 1, "d": 1, "e": 1}, 2, labels={0: "G", 1: "O"})
    w1, w2 = window_bounds("weekly", StudyPeriod("p", date(2019, 1, 7), date(2019, 1, 20)), "UTC")
    g1 = graph_from_edges({("a", "b"): 3, ("c", "d"): 3, ("a", "c"): 1, ("q", "a"): 1}, w1)
    g2 = graph_from_edges([], w2)
    weekly = [result({"a": 0, "b": 0, "c": 1, "d": 1, "q": 1}, 2), result({}, 1)]
    series = polarization_series("t", [g1, g2], inst, ideo, weekly)
    r1, r2 = series.records
    xy = next(p for p in r1.pairs if (p.group_x, p.group_y) == ("X", "Y"))
    assert xy.m_in == 6 and xy.m_out == 1
    # e is not active: the Z pairs have no members in the window
    assert all(p.aei is None for p in r1.pairs if "Z" in (p.group_x, p.group_y))
    assert r1.rmi_ideological == pytest.approx(1.0) and r1.participation.nonpartisan_count == 1
    assert r2.rmi_institutional is None and r2.chosen_B == 1
    with pytest.raises(ValueError):
        polarization_series("t", [g1], inst, ideo, [])
    path = tmp_path / "trends.csv"
    write_trends_csv([series], ideo.group_names, path)
    # one row per window and group pair
    assert len(path.read_text().splitlines()) == 1 + 2 * 3
    cells = alignment_matrix([AlignmentEntry("t", "w", weekly[0])], min_overlap=2)
    write_alignment_csv(cells, tmp_path / "align.csv")
    assert (tmp_path / "align.csv").read_text().count("\n") == 2
