"""Compiled inner loops for batched GF(q) elimination.

Both fields are characteristic 2, so addition is XOR and only the
multiplication/inverse tables differ between GF(2) and GF(256).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def window_decodability(coeffs, received, win_end, win_dim, mul, inv):
    """Track the rank of each receiver's packet set, window by window.

    coeffs:   (T, P, D) uint8, packet coefficient vectors (shared by receivers)
    received: (T, U, P) bool, per-receiver reception pattern
    win_end:  (L,) exclusive end packet index of each window's run
    win_dim:  (L,) ambient dimension K_j of each window

    Returns (T, U, L) bool: True where the packets of windows 1..j span
    the full K_j-dimensional space.
    """
    T, P, D = coeffs.shape
    U = received.shape[1]
    L = win_end.shape[0]
    out = np.zeros((T, U, L), dtype=np.bool_)
    basis = np.zeros((D, D), dtype=np.uint8)
    has_pivot = np.zeros(D, dtype=np.bool_)
    v = np.zeros(D, dtype=np.uint8)
    for t in range(T):
        for u in range(U):
            basis[:, :] = 0
            has_pivot[:] = False
            rank = 0
            start = 0
            for j in range(L):
                kj = win_dim[j]
                for p in range(start, win_end[j]):
                    if rank >= kj:
                        break
                    if not received[t, u, p]:
                        continue
                    for c in range(kj):
                        v[c] = coeffs[t, p, c]
                    for b in range(kj):
                        if has_pivot[b] and v[b] != 0:
                            f = v[b]
                            for c in range(b, kj):
                                v[c] ^= mul[f, basis[b, c]]
                    lead = -1
                    for c in range(kj):
                        if v[c] != 0:
                            lead = c
                            break
                    if lead < 0:
                        continue
                    g = inv[v[lead]]
                    for c in range(D):
                        basis[lead, c] = 0
                    for c in range(lead, kj):
                        basis[lead, c] = mul[g, v[c]]
                    has_pivot[lead] = True
                    rank += 1
                out[t, u, j] = rank == kj
                start = win_end[j]
    return out
