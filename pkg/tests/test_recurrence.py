import csv
import io
import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from nlts.recurrence import RecurrenceParams, converges, iterate, sweep, table_csv, threshold

C_S = st.floats(1.01, 10.0)
BETA_S = st.floats(1.05, 4.0)


@pytest.mark.parametrize("C,beta,expected", [
    (2.0, 2.0, 0.5),
    (math.e, 1.5, math.exp(-4)),
    (4.0, 3.0, 4.0 ** -0.25),
])
def test_threshold_values(C, beta, expected):
    assert threshold(C, beta) == pytest.approx(expected, rel=1e-15)


def test_threshold_tends_to_one_for_large_beta():
    vals = [threshold(5.0, b) for b in (2.0, 10.0, 100.0, 1000.0)]
    assert all(a < b < 1 for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 1 - 1e-5


@pytest.mark.parametrize("C,beta", [(1.0, 2.0), (0.5, 2.0), (2.0, 1.0), (2.0, 0.9)])
def test_threshold_rejects_degenerate(C, beta):
    with pytest.raises(ValueError):
        threshold(C, beta)


@pytest.mark.parametrize("kw", [{"C": 1.0}, {"beta": 1.0}, {"W0": -1e-3}, {"k_max": 0}])
def test_params_rejects(kw):
    base = {"C": 2.0, "beta": 2.0, "W0": 0.1}
    with pytest.raises(ValueError):
        RecurrenceParams(**{**base, **kw})


def test_iterate_below_threshold():
    tr = iterate(RecurrenceParams(2.0, 2.0, 0.25, 12))
    assert tr.W[:4] == (0.25, 0.0625, 0.0078125, 2.44140625e-4)
    assert tr.W[-1] < 1e-100 and not tr.overflow


def test_iterate_zero():
    tr = iterate(RecurrenceParams(2.0, 2.0, 0.0, 5))
    assert tr.W == (0.0,) * 6 and tr.k_at_underflow == 0


def test_iterate_above_threshold_diverges():
    tr = iterate(RecurrenceParams(2.0, 2.0, 1.5, 60))
    assert tr.W[:3] == (1.5, 2.25, 10.125)
    assert tr.overflow
    assert all(a < b for a, b in zip(tr.W, tr.W[1:]))
    assert not converges(RecurrenceParams(2.0, 2.0, 1.5)).converged


def test_iterate_reports_underflow_step():
    tr = iterate(RecurrenceParams(2.0, 2.0, 0.25, 60))
    assert tr.k_at_underflow is not None
    assert tr.W[tr.k_at_underflow] == 0.0 and tr.W[tr.k_at_underflow - 1] > 0


def test_converges_examples():
    c = converges(RecurrenceParams(2.0, 2.0, 0.25))
    assert c.converged is True and c.tail_bound <= 0.5
    assert converges(RecurrenceParams(2.0, 2.0, 0.0)).converged is True


@pytest.mark.parametrize("C,beta", [(2.0, 2.0), (math.e, 1.5), (10.0, 4.0), (1.1, 1.1)])
def test_boundary_is_undecided(C, beta):
    assert converges(RecurrenceParams(C, beta, threshold(C, beta))).converged is None


def test_tail_bound_dominates_the_tail():
    p = RecurrenceParams(3.0, 1.7, 0.3 * threshold(3.0, 1.7), 40)
    c = converges(p)
    tr = iterate(p)
    assert all(w <= c.tail_bound for w in tr.W[c.k_decided:])


@given(C=C_S, beta=BETA_S, frac=st.floats(1e-6, 0.999))
def test_below_threshold_converges(C, beta, frac):
    assert converges(RecurrenceParams(C, beta, frac * threshold(C, beta))).converged is True


@given(C=C_S, beta=BETA_S, frac=st.floats(1.001, 50.0))
def test_above_threshold_extremal_sequence_diverges(C, beta, frac):
    # for beta near 1 the threshold underflows to 0 and W0 would be degenerate
    assume(threshold(C, beta) > 1e-300)
    assert converges(RecurrenceParams(C, beta, frac * threshold(C, beta), 200)).converged is False


@given(C=C_S, beta=BETA_S, a=st.floats(0, 2), b=st.floats(0, 2))
def test_iterate_monotone_in_W0(C, beta, a, b):
    lo, hi = sorted((a, b))
    wl = iterate(RecurrenceParams(C, beta, lo, 20)).W
    wh = iterate(RecurrenceParams(C, beta, hi, 20)).W
    # the larger start may overflow first; compare the common prefix
    assert all(x <= y for x, y in zip(wl, wh))


@given(C1=C_S, C2=C_S, b1=BETA_S, b2=BETA_S)
def test_threshold_monotone(C1, C2, b1, b2):
    C_lo, C_hi = sorted((C1, C2))
    b_lo, b_hi = sorted((b1, b2))
    assert threshold(C_lo, 2.0) >= threshold(C_hi, 2.0)
    assert threshold(3.0, b_lo) <= threshold(3.0, b_hi)


def test_sweep_grid_all_converge():
    rows = sweep()
    assert len(rows) == 4000
    assert {r.C for r in rows} == {10 ** ((i + 1) / 20) for i in range(20)}
    assert max(r.beta for r in rows) == pytest.approx(4.0)
    assert all(r.W0 < threshold(r.C, r.beta) for r in rows)
    assert all(converges(r).converged for r in rows)


def test_table_csv():
    text = table_csv([RecurrenceParams(2.0, 2.0, 0.25), RecurrenceParams(2.0, 2.0, 0.5),
                      RecurrenceParams(2.0, 2.0, 1.5)])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["C", "beta", "W0", "converged", "k_at_underflow"]
    assert [r[3] for r in rows[1:]] == ["true", "undecided", "false"]
    assert rows[1][4] != "" and rows[3][4] == ""
