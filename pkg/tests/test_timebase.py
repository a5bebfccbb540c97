import pytest
from hypothesis import given
from hypothesis import strategies as st

from esls.timebase import Timebase, advance, start_of


def test_first_steps():
    tb = Timebase(1, 200)
    assert (tb.t, tb.tau) == (1, 1)
    tb = advance(tb)
    assert (tb.k, tb.t, tb.tau) == (2, 1, 2)


def test_period_boundary():
    tb = Timebase(200, 200)
    assert (tb.t, tb.tau) == (1, 200) and tb.end_of_research_step
    tb = advance(tb)
    assert (tb.k, tb.t, tb.tau) == (201, 2, 1)
    assert (Timebase(400, 200).t, Timebase(400, 200).tau) == (2, 200)


def test_tau_sequence():
    N = 7
    tb = Timebase(1, N)
    taus = []
    for _ in range(2 * N):
        taus.append(tb.tau)
        tb = advance(tb)
    assert taus == list(range(1, N + 1)) * 2


@given(st.integers(1, 10**6), st.integers(1, 500))
def test_invariants(k, N):
    tb = Timebase(k, N)
    assert tb.t == -(-k // N)
    assert 1 <= tb.tau <= N
    assert tb.tau == k - (tb.t - 1) * N


@given(st.integers(1, 10**4), st.integers(1, 300))
def test_n_advances_increment_t(t, N):
    tb = start_of(t, N)
    assert tb.tau == 1 and tb.t == t
    for _ in range(N):
        tb = advance(tb)
    assert tb.tau == 1 and tb.t == t + 1


def test_rejects_bad_values():
    with pytest.raises(ValueError):
        Timebase(0, 10)
    with pytest.raises(ValueError):
        Timebase(1, 0)
