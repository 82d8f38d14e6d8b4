"""Brute-force reference computations, independent of the package's algorithms."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def span_rank_gf2(rows) -> int:
    """Rank over GF(2) as log2 of the number of distinct subset sums."""
    vecs = [int("".join(str(int(b)) for b in r), 2) if len(r) else 0 for r in rows]
    span = {0}
    for v in vecs:
        span |= {s ^ v for s in span}
    return len(span).bit_length() - 1


def full_rank_enumeration(K: int, n: int) -> Fraction:
    """Fraction of all binary n x K matrices with rank K."""
    if K == 0:
        return Fraction(1)
    total = hits = 0
    for bits in itertools.product((0, 1), repeat=n * K):
        rows = [bits[i * K:(i + 1) * K] for i in range(n)]
        total += 1
        hits += span_rank_gf2(rows) == K
    return Fraction(hits, total)


def nested_window_counts(window_sizes, budgets):
    """For each subset of received packets, the fraction of coefficient draws
    (each packet uniform over GF(2)^{K_j}, zero-padded) that span GF(2)^{K_i}."""
    target = window_sizes[-1]
    packet_dims = [k for k, n in zip(window_sizes, budgets) for _ in range(n)]
    table = {}
    for mask in itertools.product((0, 1), repeat=len(packet_dims)):
        dims = [d for d, r in zip(packet_dims, mask) if r]
        choices = [list(itertools.product((0, 1), repeat=d)) for d in dims]
        total = hits = 0
        for combo in itertools.product(*choices):
            rows = [tuple(v) + (0,) * (target - len(v)) for v in combo]
            total += 1
            hits += span_rank_gf2(rows) == target if target else 1
        table[mask] = Fraction(hits, total)
    return table


def nested_window_prob(window_sizes, budgets, erasures, counts=None) -> float:
    """Exact decoding probability by enumerating erasure patterns x coefficients."""
    counts = counts or nested_window_counts(window_sizes, budgets)
    packet_p = [p for p, n in zip(erasures, budgets) for _ in range(n)]
    prob = 0.0
    for mask, frac in counts.items():
        w = 1.0
        for r, p in zip(mask, packet_p):
            w *= (1.0 - p) if r else p
        prob += w * float(frac)
    return prob


def flat_exact_search(msg, p, sla, mcs_candidates, decode):
    """Enumerate every policy and pick the best one by the documented ordering:
    highest profit/cost, then lowest cost, then highest MCS vector, then
    smallest budget vector. ``decode(window_sizes, budgets, erasures)`` returns
    one user's decoding probability of the last window.

    Returns (mcs, budget, profit, cost) or None if nothing is feasible.
    """
    U = p.shape[0]
    L = msg.num_layers
    ks = msg.window_sizes
    need = [-(-U * Fraction(str(t)).numerator // Fraction(str(t)).denominator) for t in sla.coverage_targets]
    candidates = []
    for mcs in itertools.product(mcs_candidates, repeat=L):
        for budget in itertools.product(*(range(c + 1) for c in sla.budget_caps)):
            probs = np.zeros((U, L))
            for u in range(U):
                for i in range(L):
                    probs[u, i] = decode(ks[:i + 1], budget[:i + 1],
                                         [p[u, m - 1] for m in mcs[:i + 1]])
            delta = np.zeros((U, L), dtype=int)
            for u in range(U):
                for level in range(L):
                    delta[u, level] = int(any(probs[u, i] >= sla.q_hat for i in range(level, L)))
            users = delta.sum(axis=0)
            if any(users[level] < need[level] for level in range(L)):
                continue
            profit, cost = int(delta.sum()), sum(budget)
            ratio = Fraction(profit, cost) if cost else Fraction(0)
            candidates.append(((-ratio, cost, [-m for m in mcs], list(budget)), mcs, budget, profit, cost))
    if not candidates:
        return None
    best = min(candidates, key=lambda c: c[0])
    return tuple(best[1]), tuple(best[2]), best[3], best[4]
