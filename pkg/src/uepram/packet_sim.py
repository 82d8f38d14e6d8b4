"""Packet-level Monte Carlo of expanding-window RLNC multicast.

Each trial draws the coded packets once (they are broadcast, so every user
sees the same coefficient vectors), erases them independently per user,
and checks decodability of each window by Gaussian elimination over
GF(q). Payload symbols are not simulated: decodability depends only on
the coefficient matrix.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from uepram._kernels import window_decodability
from uepram.decoding_model import _draw_packets, lane_seed, window_decoding_probs
from uepram.gf import check_field, field_tables, gf_rank  # noqa: F401  (gf_rank re-exported)
from uepram.optimizer import AllocationPolicy, _erasure_matrix
from uepram.service_model import LayeredMessage

LANE_SIZE = 256


@dataclass(frozen=True)
class CodedPacket:
    window: int  # 1-based expanding window index
    coefficients: tuple[int, ...]


def encode_window(msg: LayeredMessage, window: int, count: int, q: int,
                  rng: np.random.Generator) -> list[CodedPacket]:
    """``count`` coded packets of one window with uniform GF(q) coefficients."""
    check_field(q)
    k = msg.window_sizes[window - 1]
    coeffs = rng.integers(0, q, size=(count, k))
    return [CodedPacket(window, tuple(int(c) for c in row)) for row in coeffs]


@dataclass
class SimulationReport:
    policy: AllocationPolicy
    q: int
    trials: int
    seed: int
    window_counts: np.ndarray  # (U, L) trials in which windows 1..i decode
    level_counts: np.ndarray  # (U, L) trials in which some window >= l decodes
    analytical: np.ndarray  # (U, L) DP values of P_{u,i}

    @property
    def window_freq(self) -> np.ndarray:
        return self.window_counts / self.trials

    @property
    def level_freq(self) -> np.ndarray:
        return self.level_counts / self.trials

    def binomial_agreement(self, confidence: float = 0.99) -> np.ndarray:
        """True where the empirical window count lies in the central
        ``confidence`` region of Binomial(trials, analytical)."""
        alpha = (1.0 - confidence) / 2.0
        p = np.clip(self.analytical, 0.0, 1.0)
        lo = binom.ppf(alpha, self.trials, p)
        hi = binom.ppf(1.0 - alpha, self.trials, p)
        hits = self.window_counts
        return (hits >= lo) & (hits <= hi)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "trials": self.trials,
            "seed": self.seed,
            "mcs": list(self.policy.mcs),
            "budget": list(self.policy.budget),
            "window_freq": self.window_freq.tolist(),
            "level_freq": self.level_freq.tolist(),
            "analytical": self.analytical.tolist(),
        }

    def to_csv(self) -> str:
        U, L = self.window_freq.shape
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["user"] + [f"P_win{i + 1}" for i in range(L)]
                   + [f"emp_win{i + 1}" for i in range(L)]
                   + [f"emp_level{i + 1}" for i in range(L)])
        for u in range(U):
            w.writerow([u] + [f"{x:.12g}" for x in self.analytical[u]]
                       + [f"{x:.12g}" for x in self.window_freq[u]]
                       + [f"{x:.12g}" for x in self.level_freq[u]])
        return buf.getvalue()


def lane_counts(seed: int, lane: int, trials: int, window_sizes, budgets,
                per_packet_erasure: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """(window, level) success counts, each (U, L), for one lane of trials."""
    mul, inv = field_tables(q)
    rng = lane_seed(seed, lane)
    coeffs = _draw_packets(rng, trials, window_sizes, budgets, q)
    received = rng.random((trials,) + per_packet_erasure.shape) >= per_packet_erasure[None, :, :]
    ok = window_decodability(coeffs, received, np.cumsum(budgets).astype(np.int64),
                             np.asarray(window_sizes, dtype=np.int64), mul, inv)
    level_ok = np.logical_or.accumulate(ok[:, :, ::-1], axis=2)[:, :, ::-1]
    return ok.sum(axis=0), level_ok.sum(axis=0)


def run_simulation(policy: AllocationPolicy, msg: LayeredMessage, profile, q: int = 256,
                   trials: int = 10_000, seed: int = 0, lane_size: int = LANE_SIZE) -> SimulationReport:
    """Simulate ``trials`` transmissions of the policy to every user.

    Lanes of ``lane_size`` trials draw from generators seeded by
    (seed, lane index); results are integer counts, so they do not depend
    on the order in which lanes are processed.
    """
    check_field(q)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = _erasure_matrix(profile)
    U, M = p.shape
    L = msg.num_layers
    if len(policy.mcs) != L:
        raise ValueError(f"policy describes {len(policy.mcs)} windows, message has {L}")
    if max(policy.mcs) > M:
        raise ValueError(f"MCS index {max(policy.mcs)} exceeds profile width {M}")

    ks = list(msg.window_sizes)
    ns = list(policy.budget)
    erasures = p[:, [m - 1 for m in policy.mcs]]  # (U, L)
    per_packet = np.repeat(erasures, ns, axis=1)  # (U, P)

    window_hits = np.zeros((U, L), dtype=np.int64)
    level_hits = np.zeros((U, L), dtype=np.int64)
    for lane in range(math.ceil(trials / lane_size)):
        t = min(lane_size, trials - lane * lane_size)
        w, lv = lane_counts(seed, lane, t, ks, ns, per_packet, q)
        window_hits += w
        level_hits += lv

    analytical = window_decoding_probs(ks, ns, erasures, q)
    return SimulationReport(policy, q, trials, int(seed), window_hits, level_hits, analytical)
