"""Uplink Massive MIMO link model with MRC detection.

Noise power is normalized to one, so large-scale fading coefficients and
powers are dimensionless. Rates are in bits per slot, one coherence block
per slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# Receive SNRs (dB) of the ten reference users, ascending.
REFERENCE_SNR_DB = (-0.62, 3.27, 5.4, 6.5, 9.5, 10.0, 12.8, 15.7, 17.56, 22.36)


@dataclass(frozen=True)
class SystemConfig:
    """Global constants shared by every user.

    V and A_max are in bits; eta weights the virtual queues in the
    Lyapunov function.
    """

    M: int = 100
    tau_c: int = 100
    slot_duration: float = 1e-3
    A_max: float = 2000.0
    V: float = 1e5
    eta: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.tau_c < 1:
            raise ValueError(f"tau_c must be >= 1, got {self.tau_c}")
        if not self.slot_duration > 0:
            raise ValueError("slot_duration must be positive")
        if not self.A_max > 0:
            raise ValueError("A_max must be positive")
        if not self.V > 0:
            raise ValueError("V must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")


@dataclass(frozen=True)
class UserProfile:
    beta: float
    p_pilot: float
    p_max: float
    arrival_prob: float
    B_max: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.p_pilot > 0:
            raise ValueError("p_pilot must be positive")
        if not self.p_max > 0:
            raise ValueError("p_max must be positive")
        if not 0 <= self.arrival_prob <= 1:
            raise ValueError("arrival_prob must lie in [0, 1]")
        if not self.B_max > 0:
            raise ValueError("B_max must be positive")

    @property
    def mean_arrival(self) -> float:
        """Mean arrival in bits per slot."""
        return self.arrival_prob * self.B_max


@dataclass(frozen=True)
class ChannelQuality:
    gamma: np.ndarray
    tau_p: int


@dataclass(frozen=True)
class SystemModel:
    """A :class:`SystemConfig` together with its users.

    Per-user parameters are exposed as arrays for the vectorized code paths.
    """

    config: SystemConfig
    users: tuple[UserProfile, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if not self.users:
            raise ValueError("at least one user is required")
        for k, u in enumerate(self.users):
            if u.B_max > self.config.A_max:
                raise ValueError(
                    f"user {k}: B_max={u.B_max} exceeds A_max={self.config.A_max}")

    @property
    def K(self) -> int:
        return len(self.users)

    @cached_property
    def betas(self) -> np.ndarray:
        return np.array([u.beta for u in self.users])

    @cached_property
    def p_max(self) -> np.ndarray:
        return np.array([u.p_max for u in self.users])

    @cached_property
    def p_pilot(self) -> np.ndarray:
        return np.array([u.p_pilot for u in self.users])

    @cached_property
    def arrival_prob(self) -> np.ndarray:
        return np.array([u.arrival_prob for u in self.users])

    @cached_property
    def B_max(self) -> np.ndarray:
        return np.array([u.B_max for u in self.users])

    @cached_property
    def mean_arrivals(self) -> np.ndarray:
        return self.arrival_prob * self.B_max

    def channel_quality(self, tau_p: int) -> ChannelQuality:
        return ChannelQuality(gamma_array(self.betas, self.p_pilot, tau_p), int(tau_p))

    def rates(self, powers, tau_p: int) -> np.ndarray:
        """Per-user rates (bits/slot) for ``powers`` with pilot length ``tau_p``."""
        cq = self.channel_quality(tau_p)
        sinr = sinr_mrc(powers, cq.gamma, self.betas, self.config.M)
        return rate_bits(sinr, self.config.tau_c, tau_p)

    def single_user_max_rates(self) -> np.ndarray:
        """Rate of each user at full power with every other user silent.

        Only one user is scheduled in that case, so the pilot length is 1.
        """
        gamma = gamma_array(self.betas, self.p_pilot, 1)
        sinr = self.config.M * self.p_max * gamma / (1.0 + self.betas * self.p_max)
        return rate_bits(sinr, self.config.tau_c, 1)


def gamma_of(user: UserProfile, tau_p: int) -> float:
    """Mean-square channel estimate of ``user`` for a pilot of length ``tau_p``."""
    if tau_p < 1:
        raise ValueError(f"tau_p must be >= 1, got {tau_p}")
    x = tau_p * user.p_pilot * user.beta
    return x * user.beta / (1.0 + x)


def gamma_array(betas, p_pilot, tau_p: int) -> np.ndarray:
    if tau_p < 1:
        raise ValueError(f"tau_p must be >= 1, got {tau_p}")
    betas = np.asarray(betas, dtype=float)
    x = tau_p * np.asarray(p_pilot, dtype=float) * betas
    return x * betas / (1.0 + x)


def sinr_mrc(powers, gammas, betas, M: int) -> np.ndarray:
    """Per-user SINR with maximum-ratio combining.

    Parameters
    ----------
    powers : array_like
        Payload powers, non-negative.
    gammas : array_like or ChannelQuality
        Mean-square channel estimates.
    betas : array_like
        Large-scale fading coefficients.
    M : int
        Number of BS antennas.
    """
    if isinstance(gammas, ChannelQuality):
        gammas = gammas.gamma
    p = np.asarray(powers, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    interference = 1.0 + np.dot(np.asarray(betas, dtype=float), p)
    return M * p * np.asarray(gammas, dtype=float) / interference


def rate_bits(sinr, tau_c: int, tau_p: int):
    """Ergodic rate lower bound in bits per slot."""
    if tau_p > tau_c:
        raise ValueError(f"tau_p={tau_p} exceeds tau_c={tau_c}")
    if tau_p < 0:
        raise ValueError("tau_p must be non-negative")
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("sinr must be non-negative")
    return (tau_c - tau_p) * np.log2(1.0 + sinr)


def beta_from_snr(snr_db: float, p_max: float) -> float:
    """Large-scale fading that gives ``snr_db`` at full power under unit noise."""
    if not p_max > 0:
        raise ValueError("p_max must be positive")
    return 10.0 ** (snr_db / 10.0) / p_max


def reference_users(arrival_prob: float, B_max: float, p_max: float = 1.0,
                  snr_db=REFERENCE_SNR_DB) -> tuple[UserProfile, ...]:
    """Reference users with pilot power equal to the payload budget."""
    return tuple(
        UserProfile(beta=beta_from_snr(s, p_max), p_pilot=p_max, p_max=p_max,
                    arrival_prob=arrival_prob, B_max=B_max)
        for s in snr_db)
