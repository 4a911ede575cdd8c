import math
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarscope.contingency import (MarginError, count_tables, log_omega, log_omega_approx, log_omega_method)
from polarscope.synth import oracle_count_tables


def two_row_poly(first, cols):
    # coefficient of t**first in prod (1 + t + ... + t**c)
    poly = [1]
    for c in cols:
        nxt = [0] * (len(poly) + c)
        for i, a in enumerate(poly):
            for k in range(c + 1):
                nxt[i + k] += a
        poly = nxt
    return poly[first] if 0 <= first < len(poly) else 0


def three_row_count(rows, cols):
    r1, r2, _ = rows
    total = 0
    for x in product(*(range(c + 1) for c in cols)):
        if sum(x) == r1:
            total += two_row_poly(r2, [c - a for c, a in zip(cols, x)])
    return total


def test_two_by_two_closed_form():
    for r1, r2, c1 in [(3, 4, 2), (10, 10, 7), (0, 5, 5), (6, 1, 6)]:
        c2 = r1 + r2 - c1
        want = min(r1, c1) - max(0, r1 - c2) + 1
        assert count_tables([r1, r2], [c1, c2]) == want


def test_known_small_values():
    assert count_tables([1, 1], [1, 1]) == 2
    assert count_tables([2, 2], [2, 2]) == 3
    assert count_tables([1, 1, 1], [1, 1, 1]) == 6  # permutation matrices
    assert count_tables([5], [2, 3]) == 1
    assert log_omega([], []) == 0.0


@pytest.mark.parametrize("rows,cols", [
    ((4, 3, 2), (3, 3, 3)), ((5, 5, 4), (2, 6, 6)), ((7, 2, 1), (1, 1, 1, 7)), ((2, 2, 2, 2), (4, 4)),
])
def test_against_brute_force_oracle(rows, cols):
    assert count_tables(rows, cols) == oracle_count_tables(rows, cols)
    assert log_omega(rows, cols) == pytest.approx(math.log(oracle_count_tables(rows, cols)), rel=1e-12)


@pytest.mark.parametrize("rows,cols", [((20, 15, 12), (18, 17, 12)), ((30, 10, 5), (25, 12, 8))])
def test_three_row_route_beyond_small(rows, cols):
    assert sum(rows) > 40 and log_omega_method(rows, cols) == "exact"
    assert log_omega(rows, cols) == pytest.approx(math.log(three_row_count(rows, cols)), rel=1e-10)


def test_approx_route_is_flagged_and_close():
    rows, cols = (40, 30, 30, 20), (35, 35, 25, 25)
    assert log_omega_method(rows, cols) == "approx"
    assert math.isfinite(log_omega(rows, cols))
    # the approximation agrees with an exact three-row value to within 1 %
    r3, c3 = (500, 400, 300), (450, 450, 300)
    assert log_omega_approx(r3, c3) == pytest.approx(log_omega(r3, c3), rel=0.01)


def test_bad_margins():
    with pytest.raises(MarginError):
        log_omega([3, 2], [4])
    with pytest.raises(MarginError):
        log_omega([-1, 2], [1])


margins = st.lists(st.integers(0, 5), min_size=1, max_size=4)


@settings(max_examples=60, deadline=None)
@given(rows=margins, data=st.data())
def test_invariant_to_order_transpose_and_zeros(rows, data):
    n = sum(rows)
    cols = data.draw(st.lists(st.integers(0, 5), min_size=1, max_size=4).filter(lambda c: sum(c) <= n))
    cols = cols + [n - sum(cols)]
    base = log_omega(rows, cols)
    perm = data.draw(st.permutations(cols))
    assert log_omega(rows[::-1], list(perm)) == base
    assert log_omega(cols, rows) == base
    assert log_omega(rows + [0, 0], [0] + cols) == base
    if n <= 14:
        assert base == pytest.approx(math.log(oracle_count_tables(rows, cols)), abs=1e-12)
