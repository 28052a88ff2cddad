import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsa_mimo.queueing import (
    ArrivalProcess, QueueState, SlotArrivals, draw_arrivals, update_queues, with_backlog,
)

A_MAX = 50.0


def state_with(**kw):
    return with_backlog(QueueState.empty(1), **kw)


class TestUpdate:
    def test_examples(self):
        s = state_with(L=[5.0], Q=[10.0])
        assert update_queues(s, [3.0], [4.0], [0.0], [0.0]).Q[0] == 9.0
        s = state_with(Q=[2.0])
        assert update_queues(s, [0.0], [5.0], [0.0], [0.0]).Q[0] == 0.0

    def test_all_three_recursions(self):
        s = state_with(L=[7.0], Q=[4.0], Y=[6.0])
        n = update_queues(s, [5.0], [1.0], [2.0], SlotArrivals(np.array([9.0])))
        assert (n.L[0], n.Q[0], n.Y[0], n.t) == (11.0, 8.0, 3.0, 1)
        assert n.cumulative_arrived[0] == 9.0
        assert n.cumulative_admitted[0] == 5.0
        assert n.cumulative_served[0] == 1.0

    def test_served_is_capped_by_backlog(self):
        s = state_with(L=[0.0], Q=[3.0])
        s = with_backlog(s, cumulative_admitted=[3.0], cumulative_arrived=[3.0])
        n = update_queues(s, [0.0], [100.0], [0.0], [0.0])
        assert n.cumulative_served[0] == 3.0

    def test_over_admission_rejected(self):
        with pytest.raises(ValueError, match="exceeds reservoir"):
            update_queues(state_with(L=[1.0]), [2.0], [0.0], [0.0], [0.0])

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            update_queues(state_with(L=[1.0]), [0.0], [-1.0], [0.0], [0.0])

    def test_csv_rows(self):
        s = with_backlog(QueueState.empty(2), Q=[1.5, 0.0])
        rows = list(s.csv_rows())
        assert rows[0][:4] == (0, 0, "0.0", "1.5")
        assert len(rows) == 2


@st.composite
def transitions(draw, K=3, n=40):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return seed, K, n


def random_walk(seed, K, n):
    """Random admissible inputs; many zeros so queues drain and refill."""
    rng = np.random.default_rng(seed)
    s = QueueState.empty(K)
    states = [s]
    for _ in range(n):
        cap = np.minimum(s.L, A_MAX)
        A = np.where(rng.random(K) < 0.3, cap, rng.uniform(0, 1, K) * cap)
        A = np.where(rng.random(K) < 0.2, 0.0, A)
        R = rng.exponential(20.0, K) * (rng.random(K) < 0.8)
        nu = rng.uniform(0, A_MAX, K) * (rng.random(K) < 0.5)
        B = np.where(rng.random(K) < 0.4, rng.uniform(0, A_MAX, K), 0.0)
        s = update_queues(s, A, R, nu, B)
        states.append(s)
    return states


@settings(max_examples=50, deadline=None)
@given(transitions())
def test_invariants_hold_along_random_walks(args):
    states = random_walk(*args)
    for prev, cur in zip(states, states[1:]):
        for arr in (cur.L, cur.Q, cur.Y):
            assert np.all(arr >= 0)
        assert np.all(cur.cumulative_served <= cur.cumulative_admitted)
        assert np.all(cur.cumulative_admitted <= cur.cumulative_arrived)
        assert np.all(cur.cumulative_arrived >= prev.cumulative_arrived)
        assert np.all(cur.cumulative_admitted >= prev.cumulative_admitted)
        assert np.all(cur.cumulative_served >= prev.cumulative_served)
        assert np.all(cur.Q <= prev.Q + A_MAX)


def test_replay_is_identical():
    a = random_walk(11, 4, 1000)[-1]
    b = random_walk(11, 4, 1000)[-1]
    for name in ("L", "Q", "Y", "cumulative_arrived", "cumulative_admitted", "cumulative_served"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


class TestArrivals:
    def test_degenerate_probabilities(self):
        proc = ArrivalProcess([0.0, 1.0], [7.0, 9.0], seed=3)
        for _ in range(200):
            B = draw_arrivals(proc).B
            assert B[0] == 0.0 and B[1] == 9.0

    def test_empirical_mean_within_three_sigma(self):
        p, n = 0.4, 100_000
        proc = ArrivalProcess([p], [500.0], seed=5)
        hits = sum(draw_arrivals(proc).B[0] > 0 for _ in range(n))
        assert abs(hits - p * n) <= 3 * np.sqrt(n * p * (1 - p))

    def test_same_seed_same_sequence(self):
        a = ArrivalProcess([0.3, 0.6], [1.0, 1.0], seed=9)
        b = ArrivalProcess([0.3, 0.6], [1.0, 1.0], seed=9)
        for _ in range(500):
            np.testing.assert_array_equal(a.draw().B, b.draw().B)

    def test_adding_a_user_keeps_existing_streams(self):
        a = ArrivalProcess([0.5, 0.5], [1.0, 1.0], seed=1)
        b = ArrivalProcess([0.5, 0.5, 0.5], [1.0, 1.0, 1.0], seed=1)
        for _ in range(500):
            np.testing.assert_array_equal(a.draw().B, b.draw().B[:2])

    def test_packets_fit_burst_limit(self):
        proc = ArrivalProcess([0.5] * 3, [10.0, 20.0, 30.0], seed=2)
        for _ in range(100):
            assert np.all(proc.draw().B <= 30.0)
