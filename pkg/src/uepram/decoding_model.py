"""Probability that a receiver decodes an expanding window of RLNC packets.

The analytical engine tracks the distribution of the rank of the received
coefficient matrix. Packets are processed window by window (smallest window
first). When the received packets span a d-dimensional subspace of the
K_j-dimensional space of window j, a fresh uniform window-j coefficient
vector falls inside that subspace with probability q^(d - K_j). Every
previously received packet belongs to a window no larger than K_j, so the
subspace indeed lives inside GF(q)^K_j and the transition is exact.

Floating-point note: each per-packet update is a convex combination of
probabilities, so rounding error grows at most linearly with the number of
packets (about 1e-16 per step); for up to 1e4 packets the accumulated error
stays well below 1e-10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import NamedTuple, Sequence

import numpy as np

from uepram._kernels import window_decodability
from uepram.gf import check_field, field_tables

Z99 = NormalDist().inv_cdf(0.995)


@dataclass(frozen=True)
class WindowTransmissionPlan:
    """What one receiver sees of windows 1..i.

    ``window_sizes[j]`` is K_{j+1}, ``budgets[j]`` the number of packets sent
    for that window and ``erasures[j]`` the probability each one is lost.
    """

    window_sizes: tuple[int, ...]
    budgets: tuple[int, ...]
    erasures: tuple[float, ...]

    def __post_init__(self):
        ks = tuple(int(k) for k in self.window_sizes)
        ns = tuple(int(n) for n in self.budgets)
        ps = tuple(float(p) for p in self.erasures)
        if not len(ks) == len(ns) == len(ps):
            raise ValueError("window_sizes, budgets and erasures must have equal length")
        if any(k < 0 for k in ks) or any(b > a for a, b in zip(ks[1:], ks)):
            raise ValueError(f"window sizes must be non-negative and nested, got {ks}")
        if any(n < 0 for n in ns):
            raise ValueError(f"budgets must be non-negative, got {ns}")
        if any(not 0.0 <= p <= 1.0 for p in ps):
            raise ValueError(f"erasure probabilities must lie in [0, 1], got {ps}")
        object.__setattr__(self, "window_sizes", ks)
        object.__setattr__(self, "budgets", ns)
        object.__setattr__(self, "erasures", ps)

    @classmethod
    def from_windows(cls, windows: Sequence[tuple[int, int, float]]) -> "WindowTransmissionPlan":
        """Build from ``[(K_j, N_j, p_j), ...]``."""
        if not windows:
            return cls((), (), ())
        ks, ns, ps = zip(*windows)
        return cls(ks, ns, ps)

    @property
    def target_dim(self) -> int:
        return self.window_sizes[-1] if self.window_sizes else 0


def full_rank_prob(K: int, n: int, q: int) -> float:
    """P(n uniform vectors of GF(q)^K span the whole space)."""
    if K < 0 or n < 0:
        raise ValueError("K and n must be non-negative")
    if K == 0:
        return 1.0
    if n < K:
        return 0.0
    prob = 1.0
    for j in range(K):
        prob *= 1.0 - float(q) ** (j - n)
    return prob


def _absorb_packets(state: np.ndarray, window_size: int, n_packets: int,
                    recv: np.ndarray, q: int) -> np.ndarray:
    """Advance rank distributions by ``n_packets`` window packets.

    state: (U, D+1) rank distributions; recv: (U,) reception probabilities.
    """
    if n_packets == 0:
        return state
    D = state.shape[1] - 1
    ranks = np.arange(D + 1)
    grow = np.zeros(D + 1)
    below = ranks < window_size
    grow[below] = 1.0 - float(q) ** (ranks[below] - window_size)
    step = recv[:, None] * grow[None, :]
    state = state.copy()
    for _ in range(n_packets):
        move = state * step
        state -= move
        state[:, 1:] += move[:, :-1]
    return state


def initial_state(num_users: int, max_dim: int) -> np.ndarray:
    state = np.zeros((num_users, max_dim + 1))
    state[:, 0] = 1.0
    return state


def window_decoding_probs(window_sizes: Sequence[int], budgets: Sequence[int],
                          erasures, q: int) -> np.ndarray:
    """P_{u,i} for every receiver u and window i in one pass.

    ``erasures`` is (U, L) (or (L,) for a single receiver). Returns (U, L).
    The rank distribution after window i is exactly the distribution for
    windows 1..i, so one forward sweep yields all windows.
    """
    check_field(q)
    ks = [int(k) for k in window_sizes]
    ns = [int(n) for n in budgets]
    p = np.atleast_2d(np.asarray(erasures, dtype=float))
    if p.shape[1] != len(ks) or len(ns) != len(ks):
        raise ValueError("erasures, window_sizes and budgets disagree on the number of windows")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("erasure probabilities must lie in [0, 1]")
    out = np.zeros((p.shape[0], len(ks)))
    if not ks:
        return out
    state = initial_state(p.shape[0], max(ks))
    for j, (k, n) in enumerate(zip(ks, ns)):
        state = _absorb_packets(state, k, n, 1.0 - p[:, j], q)
        out[:, j] = state[:, k]
    return out


def window_decoding_prob(plan: WindowTransmissionPlan, q: int = 256) -> float:
    """Probability that the received packets of the plan span GF(q)^K_i."""
    check_field(q)
    if not plan.window_sizes:
        return 1.0 if plan.target_dim == 0 else 0.0
    probs = window_decoding_probs(plan.window_sizes, plan.budgets,
                                  np.array(plan.erasures)[None, :], q)
    return float(probs[0, -1])


class MonteCarloEstimate(NamedTuple):
    prob: float
    half_width: float
    trials: int


def lane_seed(seed: int, lane: int) -> np.random.Generator:
    """Independent generator for one lane of trials, reproducible from (seed, lane)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(lane)]))


def _draw_packets(rng: np.random.Generator, trials: int, window_sizes, budgets, q: int):
    D = max(window_sizes) if window_sizes else 0
    P = sum(budgets)
    coeffs = np.zeros((trials, P, max(D, 1)), dtype=np.uint8)
    start = 0
    for k, n in zip(window_sizes, budgets):
        if n and k:
            coeffs[:, start:start + n, :k] = rng.integers(0, q, size=(trials, n, k), dtype=np.uint8)
        start += n
    return coeffs


def mc_decoding_oracle(plan: WindowTransmissionPlan, q: int = 256, trials: int = 100_000,
                       seed: int = 0, lane_size: int = 10_000) -> MonteCarloEstimate:
    """Brute-force estimate of :func:`window_decoding_prob`.

    Draws coefficients and erasures, runs Gaussian elimination over GF(q)
    and counts full-rank outcomes. The half-width is the 99% normal
    approximation. Trials are split into lanes whose generators derive from
    (seed, lane index), so the result does not depend on how lanes are run.
    """
    check_field(q)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ks, ns, ps = list(plan.window_sizes), list(plan.budgets), list(plan.erasures)
    if not ks:
        hits = trials if plan.target_dim == 0 else 0
        return MonteCarloEstimate(hits / trials, 0.0, trials)
    mul, inv = field_tables(q)
    win_end = np.cumsum(ns).astype(np.int64)
    win_dim = np.array(ks, dtype=np.int64)
    per_packet_erasure = np.repeat(ps, ns)
    hits = 0
    for lane, lo in enumerate(range(0, trials, lane_size)):
        t = min(lane_size, trials - lo)
        rng = lane_seed(seed, lane)
        coeffs = _draw_packets(rng, t, ks, ns, q)
        received = rng.random((t, 1, len(per_packet_erasure))) >= per_packet_erasure
        ok = window_decodability(coeffs, received, win_end, win_dim, mul, inv)
        hits += int(ok[:, 0, -1].sum())
    prob = hits / trials
    half = Z99 * math.sqrt(prob * (1.0 - prob) / trials)
    return MonteCarloEstimate(prob, half, trials)
