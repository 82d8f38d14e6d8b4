"""Layered source messages, expanding windows and the per-user QoS indicator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class LayeredMessage:
    """A source message of K packets split into L layers.

    ``layer_sizes[l]`` is the number of source packets in layer l+1; the
    expanding window l+1 covers every packet of layers 1..l+1.
    """

    layer_sizes: tuple[int, ...]
    packet_bits: int | None = None  # metadata only, never enters the objective

    def __post_init__(self):
        sizes = tuple(int(k) for k in self.layer_sizes)
        if not sizes:
            raise ValueError("a layered message needs at least one layer")
        if any(k < 1 for k in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes)

    @property
    def window_sizes(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.cumsum(self.layer_sizes))

    @property
    def total(self) -> int:
        return sum(self.layer_sizes)


def expanding_window(msg: LayeredMessage, layer: int) -> int:
    """Size K_l of the l-th expanding window (1-based l)."""
    if not 1 <= layer <= msg.num_layers:
        raise ValueError(f"layer index {layer} outside 1..{msg.num_layers}")
    return msg.window_sizes[layer - 1]


def _check_probs(p: np.ndarray) -> None:
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("window decoding probabilities must lie in [0, 1]")


def _check_threshold(q_hat: float) -> None:
    if not 0.0 < q_hat <= 1.0:
        raise ValueError(f"q_hat must be in (0, 1], got {q_hat}")


def qos_indicator(win_probs: Sequence[float], q_hat: float) -> list[int]:
    """QoS indicators for one user.

    Level l is reached when some window i >= l decodes with probability at
    least ``q_hat``. The comparison is an exact ``>=`` with no epsilon.
    """
    p = np.asarray(win_probs, dtype=float)
    _check_probs(p)
    _check_threshold(q_hat)
    return [int(x) for x in qos_matrix(p[None, :], q_hat)[0]]


def qos_matrix(win_probs: np.ndarray, q_hat: float) -> np.ndarray:
    """Vectorised :func:`qos_indicator` over a (U, L) probability matrix.

    Returns an int8 (U, L) matrix whose rows are non-increasing.
    """
    p = np.asarray(win_probs, dtype=float)
    if p.ndim != 2:
        raise ValueError("expected a (users, layers) matrix")
    _check_probs(p)
    _check_threshold(q_hat)
    suffix_max = np.maximum.accumulate(p[:, ::-1], axis=1)[:, ::-1]
    return (suffix_max >= q_hat).astype(np.int8)
