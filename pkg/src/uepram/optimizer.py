"""UEP resource allocation: profit-cost evaluation, exact search, heuristic, MrT baseline.

A policy assigns every expanding window an MCS index (1-based) and a
number of coded-packet transmissions. Profit is the number of (user, QoS
level) pairs reached, cost the total number of transmissions; the objective
is their ratio subject to per-level coverage targets and per-window caps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from uepram.decoding_model import _absorb_packets, initial_state, window_decoding_probs
from uepram.gf import check_field
from uepram.service_model import LayeredMessage, qos_matrix

DEFAULT_SEARCH_CAP = 10**7


class InfeasibleError(Exception):
    """No policy meets the coverage targets within the caps."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


class SearchSpaceTooLarge(RuntimeError):
    """Exhaustive search would exceed the configured evaluation cap."""


@dataclass(frozen=True)
class AllocationPolicy:
    mcs: tuple[int, ...]
    budget: tuple[int, ...]

    def __post_init__(self):
        mcs = tuple(int(m) for m in self.mcs)
        budget = tuple(int(n) for n in self.budget)
        if len(mcs) != len(budget):
            raise ValueError("mcs and budget must have one entry per window")
        if any(m < 1 for m in mcs):
            raise ValueError(f"MCS indices are 1-based, got {mcs}")
        if any(n < 0 for n in budget):
            raise ValueError(f"budgets must be non-negative, got {budget}")
        object.__setattr__(self, "mcs", mcs)
        object.__setattr__(self, "budget", budget)


@dataclass(frozen=True)
class SlaConstraints:
    q_hat: float
    coverage_targets: tuple[float, ...]
    budget_caps: tuple[int, ...]

    def __post_init__(self):
        targets = tuple(float(t) for t in self.coverage_targets)
        caps = tuple(int(n) for n in self.budget_caps)
        if not 0.0 < self.q_hat <= 1.0:
            raise ValueError(f"q_hat must be in (0, 1], got {self.q_hat}")
        if len(targets) != len(caps):
            raise ValueError("coverage_targets and budget_caps must have equal length")
        if any(not 0.0 <= t <= 1.0 for t in targets):
            raise ValueError(f"coverage targets must lie in [0, 1], got {targets}")
        if any(n < 1 for n in caps):
            raise ValueError(f"budget caps must be >= 1, got {caps}")
        object.__setattr__(self, "coverage_targets", targets)
        object.__setattr__(self, "budget_caps", caps)

    def required_users(self, num_users: int) -> list[int]:
        # targets are read as decimals (0.9 means 9/10) so that U * t is exact
        return [math.ceil(num_users * Fraction(repr(t))) for t in self.coverage_targets]


@dataclass
class EvaluatedPolicy:
    policy: AllocationPolicy
    win_probs: np.ndarray  # (U, L) analytical recovery probabilities
    qos: np.ndarray  # (U, L) int8 indicators
    profit: int
    cost: int
    feasible: bool
    required: list[int] = field(default_factory=list)
    strategy: str = "uep-ram"

    @property
    def ratio(self) -> float:
        return self.profit / self.cost if self.cost > 0 else 0.0

    @property
    def exact_ratio(self) -> Fraction:
        return Fraction(self.profit, self.cost) if self.cost > 0 else Fraction(0)

    @property
    def users_per_level(self) -> list[int]:
        return [int(x) for x in self.qos.sum(axis=0)]

    @property
    def coverage(self) -> list[float]:
        return [float(x) for x in self.qos.mean(axis=0)]

    @property
    def qos_levels(self) -> np.ndarray:
        return self.qos.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "mcs": list(self.policy.mcs),
            "budget": list(self.policy.budget),
            "profit": int(self.profit),
            "cost": int(self.cost),
            "ratio": self.ratio,
            "feasible": bool(self.feasible),
            "users_per_level": self.users_per_level,
            "required_users": list(self.required),
        }


def _erasure_matrix(profile) -> np.ndarray:
    p = np.asarray(getattr(profile, "p", profile), dtype=float)
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
        raise ValueError("erasure profile must be a non-empty (users, MCS) matrix")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("erasure probabilities must lie in [0, 1]")
    return p


def _check_dims(msg: LayeredMessage, sla: SlaConstraints, policy: AllocationPolicy | None,
                num_mcs: int) -> None:
    L = msg.num_layers
    if len(sla.coverage_targets) != L:
        raise ValueError(f"SLA describes {len(sla.coverage_targets)} levels, message has {L}")
    if policy is not None:
        if len(policy.mcs) != L:
            raise ValueError(f"policy describes {len(policy.mcs)} windows, message has {L}")
        if max(policy.mcs) > num_mcs:
            raise ValueError(f"MCS index {max(policy.mcs)} exceeds table size {num_mcs}")


def _key(profit: int, cost: int, mcs: Sequence[int], budget: Sequence[int]):
    """Sort key, smallest is best: ratio, then cost, then higher MCS, then smaller budgets."""
    ratio = Fraction(profit, cost) if cost > 0 else Fraction(0)
    return (-ratio, cost, tuple(-m for m in mcs), tuple(budget))


def evaluate(policy: AllocationPolicy, msg: LayeredMessage, profile, sla: SlaConstraints,
             q: int = 256) -> EvaluatedPolicy:
    """Compute recovery probabilities, QoS indicators, profit, cost and feasibility."""
    check_field(q)
    p = _erasure_matrix(profile)
    _check_dims(msg, sla, policy, p.shape[1])
    erasures = p[:, [m - 1 for m in policy.mcs]]
    probs = window_decoding_probs(msg.window_sizes, policy.budget, erasures, q)
    return _assemble(policy, probs, sla, p.shape[0])


def _assemble(policy: AllocationPolicy, probs: np.ndarray, sla: SlaConstraints,
              num_users: int, strategy: str = "uep-ram", qos: np.ndarray | None = None):
    if qos is None:
        qos = qos_matrix(np.clip(probs, 0.0, 1.0), sla.q_hat)
    required = sla.required_users(num_users)
    counts = qos.sum(axis=0)
    feasible = bool(
        all(int(c) >= r for c, r in zip(counts, required))
        and all(n <= cap for n, cap in zip(policy.budget, sla.budget_caps))
    )
    return EvaluatedPolicy(policy, probs, qos, int(qos.sum()), int(sum(policy.budget)),
                           feasible, required, strategy)


def _infeasibility_report(msg, p, sla, q, mcs_candidates, strategy) -> dict:
    """Coverage of the most generous policy: most robust candidate MCS, every cap."""
    m0 = min(mcs_candidates)
    best = evaluate(AllocationPolicy((m0,) * msg.num_layers, sla.budget_caps), msg, p, sla, q)
    required = best.required
    reached = best.users_per_level
    return {
        "strategy": strategy,
        "num_users": int(p.shape[0]),
        "required_users": required,
        "max_reachable_users": reached,
        "failing_levels": [i + 1 for i, (a, r) in enumerate(zip(reached, required)) if a < r],
        "reference_policy": {"mcs": [m0] * msg.num_layers, "budget": list(sla.budget_caps)},
    }


def search_space_size(msg: LayeredMessage, sla: SlaConstraints, num_candidates: int) -> int:
    return num_candidates ** msg.num_layers * math.prod(n + 1 for n in sla.budget_caps)


def solve_exact(msg: LayeredMessage, profile, sla: SlaConstraints, q: int = 256,
                mcs_candidates: Iterable[int] | None = None,
                cap: int = DEFAULT_SEARCH_CAP) -> EvaluatedPolicy:
    """Exhaustive search over every (MCS, budget) combination.

    Rank distributions are shared along the search tree: the state after
    windows 1..j does not depend on later choices, and each extra packet of
    window j is a single DP step.
    """
    check_field(q)
    p = _erasure_matrix(profile)
    U, M = p.shape
    _check_dims(msg, sla, None, M)
    cands = sorted(set(range(1, M + 1) if mcs_candidates is None else (int(m) for m in mcs_candidates)))
    if not cands or cands[0] < 1 or cands[-1] > M:
        raise ValueError(f"MCS candidates must be a non-empty subset of 1..{M}")
    size = search_space_size(msg, sla, len(cands))
    if size > cap:
        raise SearchSpaceTooLarge(
            f"exhaustive search needs {size} evaluations (cap {cap}); use the heuristic solver"
        )

    L = msg.num_layers
    ks = msg.window_sizes
    caps = sla.budget_caps
    required = np.array(sla.required_users(U))
    probs = np.zeros((U, L))
    best: list = [None, None]  # key, (mcs, budget)

    def leaf(mcs, budget):
        suffix = np.maximum.accumulate(probs[:, ::-1], axis=1)[:, ::-1]
        delta = suffix >= sla.q_hat
        counts = delta.sum(axis=0)
        if np.any(counts < required):
            return
        key = _key(int(counts.sum()), sum(budget), mcs, budget)
        if best[0] is None or key < best[0]:
            best[0], best[1] = key, (tuple(mcs), tuple(budget))

    def descend(j, state, mcs, budget):
        if j == L:
            leaf(mcs, budget)
            return
        for m in cands:
            recv = 1.0 - p[:, m - 1]
            s = state
            for n in range(caps[j] + 1):
                if n:
                    s = _absorb_packets(s, ks[j], 1, recv, q)
                probs[:, j] = s[:, ks[j]]
                descend(j + 1, s, mcs + [m], budget + [n])

    descend(0, initial_state(U, ks[-1]), [], [])
    if best[1] is None:
        report = _infeasibility_report(msg, p, sla, q, cands, "exact")
        raise InfeasibleError("no feasible policy within the budget caps", report)
    mcs, budget = best[1]
    return evaluate(AllocationPolicy(mcs, budget), msg, p, sla, q)


def _level_count(probs: np.ndarray, q_hat: float) -> int:
    return int(np.count_nonzero(probs >= q_hat))


def _select_mcs(msg, p, sla, q, required) -> list[int]:
    """Step 1: per window, front to back, the highest MCS meeting the level target at full budget."""
    U, M = p.shape
    ks = msg.window_sizes
    state = initial_state(U, ks[-1])
    chosen = []
    for j, k in enumerate(ks):
        pick, pick_state = 1, None
        for m in range(M, 0, -1):
            s = _absorb_packets(state, k, sla.budget_caps[j], 1.0 - p[:, m - 1], q)
            if _level_count(s[:, k], sla.q_hat) >= required[j]:
                pick, pick_state = m, s
                break
        if pick_state is None:
            pick_state = _absorb_packets(state, k, sla.budget_caps[j], 1.0 - p[:, 0], q)
        chosen.append(pick)
        state = pick_state
    return chosen


def _minimal_budgets(msg, p, sla, q, required, mcs) -> list[int]:
    """Step 2: front to back, the fewest packets meeting each level's target.

    Later windows are still empty while window j is sized, so level j can
    only be met through window j itself; adding packets to later windows
    afterwards never lowers any recovery probability.
    """
    U = p.shape[0]
    ks = msg.window_sizes
    state = initial_state(U, ks[-1])
    budgets = []
    for j, k in enumerate(ks):
        recv = 1.0 - p[:, mcs[j] - 1]
        n = 0
        while n < sla.budget_caps[j] and _level_count(state[:, k], sla.q_hat) < required[j]:
            state = _absorb_packets(state, k, 1, recv, q)
            n += 1
        budgets.append(n)
    return budgets


def _local_search(start: EvaluatedPolicy, msg, p, sla, q) -> EvaluatedPolicy:
    """Single-window moves (budget +/-1 or MCS +/-1), taking the best strict ratio gain each round."""
    current = start
    L, M = msg.num_layers, p.shape[1]
    while True:
        best = None
        for j in range(L):
            for field, step in (("budget", 1), ("budget", -1), ("mcs", 1), ("mcs", -1)):
                mcs, budget = list(current.policy.mcs), list(current.policy.budget)
                if field == "budget":
                    budget[j] += step
                    if not 0 <= budget[j] <= sla.budget_caps[j]:
                        continue
                else:
                    mcs[j] += step
                    if not 1 <= mcs[j] <= M:
                        continue
                cand = evaluate(AllocationPolicy(mcs, budget), msg, p, sla, q)
                if not cand.feasible or cand.exact_ratio <= current.exact_ratio:
                    continue
                if best is None or _key(cand.profit, cand.cost, cand.policy.mcs, cand.policy.budget) < \
                        _key(best.profit, best.cost, best.policy.mcs, best.policy.budget):
                    best = cand
        if best is None:
            return current
        current = best


def _two_step(msg, p, sla, q, required) -> EvaluatedPolicy | None:
    """MCS choice, then minimal budgets, lowering MCSs until the SLA holds."""
    mcs = _select_mcs(msg, p, sla, q, required)
    while True:
        budget = _minimal_budgets(msg, p, sla, q, required, mcs)
        ev = evaluate(AllocationPolicy(mcs, budget), msg, p, sla, q)
        counts = ev.users_per_level
        short = [i for i, (c, r) in enumerate(zip(counts, required)) if c < r]
        if not short:
            return ev if ev.feasible else None
        lowerable = [j for j in range(short[0] + 1) if mcs[j] > 1]
        if not lowerable:
            return None
        mcs[lowerable[-1]] -= 1


def solve_heuristic(msg: LayeredMessage, profile, sla: SlaConstraints, q: int = 256) -> EvaluatedPolicy:
    """Two-step heuristic: choose MCSs first, then size the packet budgets.

    If the minimal budgets leave a level short (earlier windows were trimmed
    after the MCS choice), the MCS of the offending window is lowered and
    the budgets are recomputed. As a last resort the most robust MCS at
    every cap is used; when even that fails the instance is infeasible.
    """
    check_field(q)
    p = _erasure_matrix(profile)
    U, M = p.shape
    _check_dims(msg, sla, None, M)
    required = sla.required_users(U)

    # A zero target lets step 2 send nothing at all, so a second pass asks
    # every level for at least one user and the better outcome is kept.
    starts = [_two_step(msg, p, sla, q, required)]
    floored = [max(r, 1) for r in required]
    if floored != list(required):
        starts.append(_two_step(msg, p, sla, q, floored))
    starts = [ev for ev in starts if ev is not None]
    if not starts:
        fallback = evaluate(AllocationPolicy((1,) * msg.num_layers, sla.budget_caps), msg, p, sla, q)
        if not fallback.feasible:
            report = _infeasibility_report(msg, p, sla, q, [1], "heuristic")
            raise InfeasibleError("coverage targets cannot be met within the budget caps", report)
        starts = [fallback]
    results = [_local_search(ev, msg, p, sla, q) for ev in starts]
    return min(results, key=lambda ev: _key(ev.profit, ev.cost, ev.policy.mcs, ev.policy.budget))


def solve_mrt(msg: LayeredMessage, profile, sla: SlaConstraints,
              q_hat: float | None = None) -> EvaluatedPolicy:
    """Multi-rate transmission baseline: uncoded layers, one MCS per layer.

    Each source packet is sent once, so a layer is recovered only if all of
    its packets arrive. MCSs are picked front to back: layer l's MCS
    maximises the number of users that clear layer l among those that
    cleared layers 1..l-1 (ties go to the higher index). Coverage targets
    and caps are not enforced; the feasibility flag only reports them.
    """
    p = _erasure_matrix(profile)
    U, M = p.shape
    _check_dims(msg, sla, None, M)
    threshold = sla.q_hat if q_hat is None else float(q_hat)
    ks = np.array(msg.layer_sizes)
    layer_probs = (1.0 - p)[:, None, :] ** ks[None, :, None]  # (U, L, M)
    layer_ok = layer_probs >= threshold

    alive = np.ones(U, dtype=bool)
    qos = np.zeros((U, msg.num_layers), dtype=np.int8)
    mcs = []
    for layer in range(msg.num_layers):
        counts = (alive[:, None] & layer_ok[:, layer, :]).sum(axis=0)
        m = int(np.flatnonzero(counts == counts.max())[-1]) + 1
        mcs.append(m)
        alive &= layer_ok[:, layer, m - 1]
        qos[:, layer] = alive
    chosen = layer_probs[:, np.arange(msg.num_layers), np.array(mcs) - 1]
    probs = np.cumprod(chosen, axis=1)
    policy = AllocationPolicy(mcs, msg.layer_sizes)
    mrt_sla = SlaConstraints(threshold, sla.coverage_targets, sla.budget_caps)
    return _assemble(policy, probs, mrt_sla, U, strategy="mrt", qos=qos)

