"""Low-level helpers shared by the table-based modules.

Index convention used everywhere: bit ``i`` of a point index is set exactly
when coordinate ``x_{i+1}`` equals ``+1``.
"""
import os

import numpy as np

#: largest dimension for which a full truth table may be materialized
MAX_TABLE_N = int(os.environ.get("HS_MAX_TABLE_N", "26"))


class ResourceCapError(ValueError):
    """Raised when an exact computation would exceed a configured size cap."""


def check_table_n(n, cap=None, what="truth table"):
    cap = MAX_TABLE_N if cap is None else cap
    if n < 0:
        raise ValueError(f"dimension must be non-negative, got {n}")
    if n > cap:
        raise ResourceCapError(f"{what} with n={n} exceeds the cap n<={cap}")


def popcount(a):
    """Elementwise popcount of an integer array (or Python int)."""
    if isinstance(a, (int, np.integer)):
        return int(a).bit_count()
    return np.bitwise_count(np.asarray(a)).astype(np.int64)


def indices(n):
    return np.arange(1 << n, dtype=np.int64)


def coordinate_signs(n, i):
    """Array of x_i in {-1,+1} over all 2^n points (i is zero-based)."""
    return ((indices(n) >> i) & 1) * 2 - 1


def coordinate_sum(n):
    """Array of sum_i x_i over all 2^n points."""
    return 2 * popcount(indices(n)) - n


def pairs(values, i):
    """View of a length-2^n array as (lo, hi) halves along coordinate i.

    ``lo[j]`` and ``hi[j]`` are the two endpoints of one edge in direction i,
    with ``lo`` the endpoint where x_i = -1.
    """
    v = values.reshape(-1, 2, 1 << i)
    return v[:, 0, :], v[:, 1, :]


def xor_permute(values, mask):
    """Return ``out`` with ``out[j] = values[j ^ mask]`` for every index j."""
    n = values.size.bit_length() - 1
    if mask == 0 or n == 0:
        return values.copy()
    # axis a of the (2,)*n view holds bit n-1-a
    axes = tuple(n - 1 - i for i in range(n) if (mask >> i) & 1)
    return np.flip(values.reshape((2,) * n), axis=axes).reshape(-1).copy()


def signs_to_mask(signs):
    """Sign vector in {-1,+1}^n to its point index."""
    mask = 0
    for i, s in enumerate(signs):
        if s not in (1, -1):
            raise ValueError(f"sign vector entries must be +1 or -1, got {s}")
        if s == 1:
            mask |= 1 << i
    return mask


def mask_to_signs(mask, n):
    return tuple(1 if (mask >> i) & 1 else -1 for i in range(n))


def flip_mask(signs):
    """Mask of coordinates whose sign is -1."""
    return sum(1 << i for i, s in enumerate(signs) if s == -1)


def make_rng(seed, stream=0):
    """Counter-based generator: Philox keyed by ``seed``.

    Distinct ``stream`` values start in disjoint regions of the counter space,
    so per-trial or per-chunk draws never overlap and do not depend on how
    work is scheduled.
    """
    seed = int(seed) & ((1 << 128) - 1)
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, seed >> 64], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(stream) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def worker_count():
    """Pool size: HS_THREADS when set, otherwise the CPU count."""
    default = os.cpu_count() or 1
    try:
        return max(1, int(os.environ.get("HS_THREADS", default)))
    except ValueError:
        return default


def parallel_map(fn, items, threads=None):
    """Ordered map over ``items`` on a thread pool capped by HS_THREADS."""
    items = list(items)
    threads = worker_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
