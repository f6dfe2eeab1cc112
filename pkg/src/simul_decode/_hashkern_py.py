"""Numpy fallback for the compiled hash scorer kernel (``_hashkern.pyx``)."""
from functools import lru_cache

import numpy as np

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
LOG_FLOOR = -1e9
BACKEND = "python"

_MASK = (1 << 64) - 1
_PRIME = np.uint64(FNV_PRIME)


def fnv1a64(data, h=FNV_OFFSET):
    for byte in bytes(data):
        h = ((h ^ byte) * FNV_PRIME) & _MASK
    return h


@lru_cache(maxsize=16)
def _digit_table(vocab_size):
    """Per-position decimal digit bytes of 0..V-1 plus a mask of which positions exist."""
    strs = [str(v).encode() for v in range(vocab_size)]
    width = max(len(s) for s in strs)
    digits = np.zeros((width, vocab_size), dtype=np.uint64)
    present = np.zeros((width, vocab_size), dtype=bool)
    for v, s in enumerate(strs):
        digits[: len(s), v] = list(s)
        present[: len(s), v] = True
    return digits, present


def _row(state, vocab_size, alpha, eos_weight):
    digits, present = _digit_table(vocab_size)
    h = np.full(vocab_size, state, dtype=np.uint64)
    for pos in range(digits.shape[0]):
        mask = present[pos]
        h[mask] = (h[mask] ^ digits[pos, mask]) * _PRIME
    w = (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    if alpha != 1.0:
        w = np.power(w, alpha)
    w[0] *= eos_weight
    # sequential sum to match the compiled kernel's accumulation order
    total = np.cumsum(w)[-1]
    out = np.full(vocab_size, LOG_FLOOR)
    pos = w > 0.0
    out[pos] = np.log(w[pos] / total)
    return out


def hash_logprobs_batch(prefixes, vocab_size, alpha, eos_weight):
    out = np.empty((len(prefixes), vocab_size), dtype=np.float64)
    for r, prefix in enumerate(prefixes):
        out[r] = _row(fnv1a64(prefix), vocab_size, float(alpha), float(eos_weight))
    return out
