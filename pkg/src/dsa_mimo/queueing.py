"""Reservoir, transmission and virtual queues, plus Bernoulli packet arrivals."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

CSV_FIELDS = ("slot", "user", "L", "Q", "Y", "cum_arrived", "cum_admitted", "cum_served")


@dataclass(frozen=True)
class QueueState:
    """Per-user backlogs in bits at the start of slot ``t``."""

    L: np.ndarray
    Q: np.ndarray
    Y: np.ndarray
    cumulative_arrived: np.ndarray
    cumulative_admitted: np.ndarray
    cumulative_served: np.ndarray
    t: int = 0

    @classmethod
    def empty(cls, K: int) -> "QueueState":
        z = np.zeros(K)
        return cls(z, z, z, z, z, z, 0)

    @property
    def K(self) -> int:
        return self.L.size

    @property
    def backlog(self) -> np.ndarray:
        return self.L + self.Q

    def csv_rows(self):
        """One row per user, in ``CSV_FIELDS`` order."""
        for k in range(self.K):
            yield (self.t, k, repr(float(self.L[k])), repr(float(self.Q[k])),
                   repr(float(self.Y[k])), repr(float(self.cumulative_arrived[k])),
                   repr(float(self.cumulative_admitted[k])),
                   repr(float(self.cumulative_served[k])))


@dataclass(frozen=True)
class SlotArrivals:
    B: np.ndarray


class ArrivalProcess:
    """Bernoulli packet generator with one PCG64 stream per user.

    User k draws from ``SeedSequence(seed, spawn_key=(k,))``, so the
    sequence seen by one user does not depend on how many other users exist.
    """

    def __init__(self, arrival_prob, B_max, seed: int):
        self.arrival_prob = np.asarray(arrival_prob, dtype=float)
        self.B_max = np.asarray(B_max, dtype=float)
        self.seed = int(seed)
        self._rngs = [np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(self.seed, spawn_key=(k,))))
            for k in range(self.arrival_prob.size)]

    def draw(self) -> SlotArrivals:
        u = np.array([rng.random() for rng in self._rngs])
        return SlotArrivals(np.where(u < self.arrival_prob, self.B_max, 0.0))


def draw_arrivals(process: ArrivalProcess) -> SlotArrivals:
    return process.draw()


def update_queues(state: QueueState, A, R, nu, B) -> QueueState:
    """Advance all three queues by one slot.

    ``Q' = max(Q - R, 0) + A``, ``Y' = max(Y - A, 0) + nu`` and
    ``L' = max(L - A, 0) + B``. Service actually delivered is ``min(Q, R)``.
    """
    A = np.asarray(A, dtype=float)
    R = np.asarray(R, dtype=float)
    nu = np.asarray(nu, dtype=float)
    B = B.B if isinstance(B, SlotArrivals) else np.asarray(B, dtype=float)
    if np.any(A < 0) or np.any(R < 0) or np.any(nu < 0) or np.any(B < 0):
        raise ValueError("A, R, nu and B must be non-negative")
    if np.any(A > state.L):
        k = int(np.argmax(A - state.L))
        raise ValueError(f"user {k}: admitted {A[k]} bits exceeds reservoir {state.L[k]}")

    served = np.minimum(state.Q, R)
    arrived = state.cumulative_arrived + B
    # min() only absorbs float drift between recursive backlogs and counters
    admitted = np.minimum(state.cumulative_admitted + A, arrived)
    delivered = np.minimum(state.cumulative_served + served, admitted)
    return QueueState(
        L=np.maximum(state.L - A, 0.0) + B,
        Q=np.maximum(state.Q - R, 0.0) + A,
        Y=np.maximum(state.Y - A, 0.0) + nu,
        cumulative_arrived=arrived,
        cumulative_admitted=admitted,
        cumulative_served=delivered,
        t=state.t + 1,
    )


def with_backlog(state: QueueState, **kw) -> QueueState:
    """Copy of ``state`` with some arrays replaced; handy in tests."""
    return replace(state, **{k: np.asarray(v, dtype=float) for k, v in kw.items()})
