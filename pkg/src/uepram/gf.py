"""Arithmetic over GF(2) and GF(2^8), plus rank by Gaussian elimination.

GF(2^8) uses the AES reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B)
with generator 0x03, so tables agree bit-exactly with any other
implementation using the same convention.
"""

from __future__ import annotations

import numpy as np

SUPPORTED_FIELDS = (2, 256)

AES_POLY = 0x11B


def check_field(q: int) -> int:
    if q not in SUPPORTED_FIELDS:
        raise ValueError(f"unsupported field size q={q}; expected one of {SUPPORTED_FIELDS}")
    return q


def _build_gf256_tables():
    exp = np.zeros(512, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        # multiply by the generator 0x03: x*2 ^ x
        x2 = x << 1
        if x2 & 0x100:
            x2 ^= AES_POLY
        x = x2 ^ x
    exp[255:510] = exp[0:255]
    return exp, log


GF256_EXP, GF256_LOG = _build_gf256_tables()


def gf256_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(GF256_EXP[GF256_LOG[a] + GF256_LOG[b]])


def gf256_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return int(GF256_EXP[255 - GF256_LOG[a]])


def _build_mul_table(q: int) -> np.ndarray:
    if q == 2:
        return np.array([[0, 0], [0, 1]], dtype=np.uint8)
    a = np.arange(256)
    la = GF256_LOG[a][:, None] + GF256_LOG[a][None, :]
    table = GF256_EXP[la].astype(np.uint8)
    table[0, :] = 0
    table[:, 0] = 0
    return table


def _build_inv_table(q: int) -> np.ndarray:
    if q == 2:
        return np.array([0, 1], dtype=np.uint8)
    inv = np.zeros(256, dtype=np.uint8)
    for a in range(1, 256):
        inv[a] = gf256_inv(a)
    return inv


_TABLES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def field_tables(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (multiplication table, inverse table) as uint8 arrays for GF(q)."""
    check_field(q)
    if q not in _TABLES:
        _TABLES[q] = (_build_mul_table(q), _build_inv_table(q))
    return _TABLES[q]


def _rank_gf2(rows) -> int:
    # each row packed into a Python int; basis keyed by leading bit
    basis: dict[int, int] = {}
    for row in rows:
        v = 0
        for bit in row:
            v = (v << 1) | (int(bit) & 1)
        while v:
            lead = v.bit_length() - 1
            if lead not in basis:
                basis[lead] = v
                break
            v ^= basis[lead]
    return len(basis)


def _rank_gf256(rows) -> int:
    m = [[int(x) for x in row] for row in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        inv = gf256_inv(m[rank][col])
        m[rank] = [gf256_mul(inv, x) for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col]
                m[r] = [x ^ gf256_mul(f, y) for x, y in zip(m[r], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


def gf_rank(matrix, q: int = 256) -> int:
    """Rank of a matrix with entries in GF(q), q in {2, 256}."""
    check_field(q)
    arr = np.asarray(matrix, dtype=np.int64)
    if arr.size == 0:
        return 0
    if arr.ndim != 2:
        raise ValueError("gf_rank expects a 2-D matrix")
    if arr.min() < 0 or arr.max() >= q:
        raise ValueError(f"matrix entries must lie in [0, {q})")
    if q == 2:
        return _rank_gf2(arr.tolist())
    return _rank_gf256(arr.tolist())
