"""Counting non-negative integer matrices with fixed row and column sums.

``log_omega(rows, cols)`` returns the natural log of that count.  It is the
correction term of the reduced mutual information.  Exact routes:

* one row or one column: a single table;
* two rows (after transposing so the short side is the rows): inclusion-
  exclusion over the column caps for up to 16 columns, otherwise an exact
  integer convolution over columns;
* small totals (``n <= SMALL_EXACT_N``): row peeling down to two rows;
* three rows with ``n <= THREE_ROW_EXACT_N``: a floating-point dynamic
  program over the partial sums of the first two rows.

Anything else uses the analytic estimate of Jerdee, Kirkley and Newman for
the number of contingency tables (the effective-Dirichlet form), and the
method is reported by :func:`log_omega_method` so callers can flag it.
"""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.special import gammaln

TWO_ROW_EXACT_N = 100_000
THREE_ROW_EXACT_N = 2000
SMALL_EXACT_N = 40
INCLUSION_EXCLUSION_MAX_COLS = 16


class MarginError(ValueError):
    pass


def _canonical(rows: Sequence[int], cols: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    r = [int(x) for x in rows]
    c = [int(x) for x in cols]
    if any(x < 0 for x in r) or any(x < 0 for x in c):
        raise MarginError("margins must be non-negative")
    n = sum(r)
    if n != sum(c):
        raise MarginError(f"row sums total {n} but column sums total {sum(c)}")
    r = tuple(sorted((x for x in r if x), reverse=True))
    c = tuple(sorted((x for x in c if x), reverse=True))
    # rows become the shorter side; ties ordered so (a, b) and (b, a) agree
    if len(r) > len(c) or (len(r) == len(c) and r > c):
        r, c = c, r
    return r, c, n


def log_omega_method(rows: Sequence[int], cols: Sequence[int]) -> str:
    """``"exact"`` or ``"approx"``: which route :func:`log_omega` takes."""
    r, c, n = _canonical(rows, cols)
    if len(r) <= 1:
        return "exact"
    if len(r) == 2 and n <= TWO_ROW_EXACT_N:
        return "exact"
    if n <= SMALL_EXACT_N:
        return "exact"
    if len(r) == 3 and n <= THREE_ROW_EXACT_N:
        return "exact"
    return "approx"


def log_omega(rows: Sequence[int], cols: Sequence[int]) -> float:
    """Natural log of the number of non-negative integer tables with the given margins."""
    r, c, n = _canonical(rows, cols)
    if len(r) <= 1:
        return 0.0
    if len(r) == 2 and n <= TWO_ROW_EXACT_N:
        return math.log(_count_two_rows(r[0], c))
    if n <= SMALL_EXACT_N:
        return math.log(_count_small(r, c))
    if len(r) == 3 and n <= THREE_ROW_EXACT_N:
        return _log_count_three_rows(r, c)
    return log_omega_approx(r, c)


def count_tables(rows: Sequence[int], cols: Sequence[int]) -> int:
    """Exact integer count; raises for margins outside the exact routes."""
    r, c, n = _canonical(rows, cols)
    if len(r) <= 1:
        return 1
    if len(r) == 2:
        return _count_two_rows(r[0], c)
    if n <= SMALL_EXACT_N:
        return _count_small(r, c)
    raise MarginError("no exact integer route for these margins")


def _compositions_two_rows_ie(target: int, caps: tuple[int, ...]) -> int:
    # solutions of sum x_j = target with 0 <= x_j <= caps[j]
    k = len(caps)
    total = 0
    for size in range(k + 1):
        sign = -1 if size % 2 else 1
        for subset in combinations(caps, size):
            rest = target - sum(subset) - size
            if rest >= 0:
                total += sign * math.comb(rest + k - 1, k - 1)
    return total


def _count_two_rows(first: int, cols: tuple[int, ...]) -> int:
    if len(cols) <= INCLUSION_EXCLUSION_MAX_COLS:
        return _compositions_two_rows_ie(first, cols)
    ways = [1] + [0] * first
    for cap in cols:
        prefix = [0] * (first + 2)
        for t in range(first + 1):
            prefix[t + 1] = prefix[t] + ways[t]
        ways = [prefix[t + 1] - prefix[max(0, t - cap)] for t in range(first + 1)]
    return ways[first]


@lru_cache(maxsize=200_000)
def _count_small(rows: tuple[int, ...], cols: tuple[int, ...]) -> int:
    # rows sorted desc, cols sorted desc, both without zeros
    if len(rows) <= 1 or len(cols) <= 1:
        return 1
    if len(rows) == 2:
        return _count_two_rows(rows[0], cols)
    if len(cols) == 2:
        return _count_two_rows(cols[0], rows)
    head, tail = rows[0], rows[1:]
    total = 0
    for first_row in _bounded_compositions(head, cols):
        rest = tuple(sorted((c - x for c, x in zip(cols, first_row) if c - x), reverse=True))
        total += _count_small(tail, rest)
    return total


def _bounded_compositions(total: int, caps: tuple[int, ...]):
    k = len(caps)
    suffix = [0] * (k + 1)
    for j in range(k - 1, -1, -1):
        suffix[j] = suffix[j + 1] + caps[j]
    out = [0] * k

    def rec(j: int, remaining: int):
        if j == k - 1:
            if remaining <= caps[j]:
                out[j] = remaining
                yield tuple(out)
            return
        lo = max(0, remaining - suffix[j + 1])
        for x in range(lo, min(caps[j], remaining) + 1):
            out[j] = x
            yield from rec(j + 1, remaining - x)

    if total <= suffix[0]:
        yield from rec(0, total)


def _log_count_three_rows(rows: tuple[int, ...], cols: tuple[int, ...]) -> float:
    """Exact-in-floating-point count of 3 x S tables.

    State ``F[u, v]`` counts fillings of the processed columns whose first and
    second rows sum to ``u`` and ``v``; the third row takes the remainder.  A
    column of total ``b`` adds ``(x1, x2)`` with ``x1 + x2 <= b``, a
    triangular window sum computed with one cumulative sum along ``v`` and one
    along each of the two remaining edges of the triangle.
    """
    a1, a2 = rows[0], rows[1]
    F = np.zeros((a1 + 1, a2 + 1))
    F[0, 0] = 1.0
    log_scale = 0.0
    U_IDX, V_IDX = np.indices(F.shape)
    for b in cols:
        SV = np.cumsum(F, axis=1)
        # vertical edge: sum_{x1=0..b} SV[U - x1, V]
        W = np.cumsum(SV, axis=0)
        T1 = W.copy()
        if b + 1 <= a1:
            T1[b + 1:] -= W[: a1 - b]
        # slanted edge: sum_{x1=0..b} SV[U - x1, V - b - 1 + x1]
        D = np.zeros_like(SV)
        D[0] = SV[0]
        for i in range(1, a1 + 1):
            D[i, :-1] = SV[i, :-1] + D[i - 1, 1:]
            D[i, -1] = SV[i, -1]
        j0 = V_IDX - b - 1
        si = U_IDX + np.minimum(j0, 0)
        sj = np.maximum(j0, 0)
        T2 = np.where(si >= 0, D[np.maximum(si, 0), sj], 0.0)
        ui = U_IDX - b - 1
        T2 -= np.where(ui >= 0, D[np.maximum(ui, 0), V_IDX], 0.0)
        new = T1 - T2
        peak = new.max()
        if peak > 0:
            new /= peak
            log_scale += math.log(peak)
        F = new
    value = F[a1, a2]
    if value <= 0:
        raise MarginError("margins admit no table")
    return log_scale + math.log(value)


def log_omega_approx(rows: Sequence[int], cols: Sequence[int]) -> float:
    """Effective-Dirichlet estimate of log(number of tables).

    With ``R`` rows, ``S`` columns and total ``n``::

        w   = n / (n + R S / 2)
        x_r = (1 - w) / R + w a_r / n,  y_s = (1 - w) / S + w b_s / n
        mu  = (R + 1) / (R sum_s y_s^2) - 1 / R
        nu  = (S + 1) / (S sum_r x_r^2) - 1 / S

        log Omega ~ (R-1)(S-1) log(n + R S / 2)
                    + (R + nu - 2)/2 sum_s log y_s + (S + mu - 2)/2 sum_r log x_r
                    + 1/2 log[ Gamma(mu R) Gamma(nu S)
                               / (Gamma(nu)^S Gamma(mu)^R Gamma(R)^S Gamma(S)^R) ]
    """
    a = np.asarray([x for x in rows if x], dtype=np.float64)
    b = np.asarray([x for x in cols if x], dtype=np.float64)
    R, S = len(a), len(b)
    if R <= 1 or S <= 1:
        return 0.0
    n = a.sum()
    w = n / (n + 0.5 * R * S)
    x = (1.0 - w) / R + w * a / n
    y = (1.0 - w) / S + w * b / n
    mu = (R + 1.0) / (R * np.sum(y * y)) - 1.0 / R
    nu = (S + 1.0) / (S * np.sum(x * x)) - 1.0 / S
    value = (
        (R - 1) * (S - 1) * math.log(n + 0.5 * R * S)
        + 0.5 * (R + nu - 2.0) * np.sum(np.log(y))
        + 0.5 * (S + mu - 2.0) * np.sum(np.log(x))
        + 0.5 * (
            gammaln(mu * R) + gammaln(nu * S)
            - S * gammaln(nu) - R * gammaln(mu) - S * gammaln(R) - R * gammaln(S)
        )
    )
    return float(value)
