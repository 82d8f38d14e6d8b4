import numpy as np
import pytest

from uepram.decoding_model import full_rank_prob
from uepram.optimizer import AllocationPolicy
from uepram.packet_sim import SimulationReport, encode_window, lane_counts, run_simulation
from uepram.service_model import LayeredMessage


def test_encode_window_shapes():
    msg = LayeredMessage([2, 3])
    pkts = encode_window(msg, 2, 4, 256, np.random.default_rng(0))
    assert len(pkts) == 4
    assert all(p.window == 2 and len(p.coefficients) == 5 for p in pkts)
    assert all(0 <= c < 256 for p in pkts for c in p.coefficients)


def test_perfect_channel_decodes_everything():
    msg = LayeredMessage([2, 3, 4])
    policy = AllocationPolicy((1, 1, 1), tuple(k + 20 for k in msg.window_sizes))
    rep = run_simulation(policy, msg, np.zeros((3, 1)), 256, trials=2000, seed=1)
    assert full_rank_prob(9, 29, 256) > 0.999999
    assert np.all(rep.level_freq[:, -1] >= 0.999)


def test_dead_channel_decodes_nothing():
    msg = LayeredMessage([2, 3])
    rep = run_simulation(AllocationPolicy((1, 1), (5, 5)), msg, np.ones((2, 1)), 2, trials=500, seed=1)
    assert rep.window_freq.sum() == 0 and rep.level_freq.sum() == 0


def test_level_frequency_dominates_suffix_max():
    rng = np.random.default_rng(3)
    msg = LayeredMessage([2, 2, 3])
    p = np.sort(rng.uniform(0.1, 0.6, size=(4, 2)), axis=1)
    policy = AllocationPolicy((1, 2, 1), (4, 6, 8))
    trials = 20_000
    rep = run_simulation(policy, msg, p, 2, trials=trials, seed=5)
    suffix = np.maximum.accumulate(rep.analytical[:, ::-1], axis=1)[:, ::-1]
    half = 2.5758 * np.sqrt(suffix * (1 - suffix) / trials)
    assert np.all(rep.level_freq >= suffix - half - 1e-12)
    assert np.all(np.diff(rep.level_freq, axis=1) <= 0)


def test_window_frequencies_converge_to_dp():
    msg = LayeredMessage([1, 2, 2])
    p = np.array([[0.1, 0.3], [0.4, 0.5]])
    for q in (2, 256):
        rep = run_simulation(AllocationPolicy((1, 2, 1), (2, 4, 3)), msg, p, q, trials=100_000, seed=q)
        assert rep.binomial_agreement(0.99).mean() >= 5 / 6


def test_bit_identical_reruns():
    msg = LayeredMessage([2, 3])
    p = np.array([[0.1, 0.2], [0.3, 0.6]])
    policy = AllocationPolicy((2, 1), (5, 6))
    a = run_simulation(policy, msg, p, 256, trials=3000, seed=42)
    b = run_simulation(policy, msg, p, 256, trials=3000, seed=42)
    assert a.to_csv() == b.to_csv()
    assert np.array_equal(a.window_counts, b.window_counts)


def test_lane_aggregation_is_order_independent():
    ks, ns = [2, 5], [4, 5]
    per_packet = np.repeat(np.array([[0.2, 0.4], [0.5, 0.1]]), ns, axis=1)
    lanes = [lane_counts(7, lane, 100, ks, ns, per_packet, 2) for lane in range(4)]
    forward = sum(w for w, _ in lanes)
    backward = sum(w for w, _ in reversed([lane_counts(7, lane, 100, ks, ns, per_packet, 2) for lane in range(4)]))
    assert np.array_equal(forward, backward)


def test_report_serialisation():
    msg = LayeredMessage([1, 1])
    rep = run_simulation(AllocationPolicy((1, 1), (2, 2)), msg, np.full((2, 1), 0.2), 2, trials=100, seed=0)
    assert isinstance(rep, SimulationReport)
    d = rep.to_dict()
    assert d["trials"] == 100 and len(d["window_freq"]) == 2
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("user,P_win1,P_win2,emp_win1")
    assert len(lines) == 3


def test_dimension_errors():
    msg = LayeredMessage([1, 1])
    with pytest.raises(ValueError):
        run_simulation(AllocationPolicy((1,), (2,)), msg, np.zeros((1, 1)), 2, trials=10)
    with pytest.raises(ValueError):
        run_simulation(AllocationPolicy((1, 3), (2, 2)), msg, np.zeros((1, 2)), 2, trials=10)
    with pytest.raises(ValueError):
        run_simulation(AllocationPolicy((1, 1), (2, 2)), msg, np.zeros((1, 2)), 2, trials=0)
