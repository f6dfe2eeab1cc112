# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled FNV-1a hash scorer kernel.

Mirrors ``_hashkern_py`` function for function; both must agree to within a
few ulps (libm ``log`` vs numpy ``log``).
"""
from libc.math cimport log, pow
from libc.stdint cimport uint64_t

import numpy as np

cdef uint64_t FNV_OFFSET = 14695981039346656037ULL
cdef uint64_t FNV_PRIME = 1099511628211ULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double LOG_FLOOR = -1e9

BACKEND = "compiled"


cdef inline uint64_t _update(uint64_t h, const unsigned char[:] data) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h = (h ^ data[i]) * FNV_PRIME
    return h


def fnv1a64(const unsigned char[:] data, uint64_t h=FNV_OFFSET):
    """FNV-1a 64-bit hash of ``data``, continuing from state ``h``."""
    return _update(h, data)


cdef void _fill_row(uint64_t state, Py_ssize_t vocab_size, double alpha,
                    double eos_weight, double[::1] out) noexcept nogil:
    cdef unsigned char digits[24]
    cdef Py_ssize_t v, n, j
    cdef uint64_t h, q
    cdef double w, total = 0.0
    for v in range(vocab_size):
        n = 0
        q = <uint64_t>v
        while True:
            digits[n] = <unsigned char>(48 + q % 10)
            n += 1
            q = q // 10
            if q == 0:
                break
        h = state
        for j in range(n - 1, -1, -1):
            h = (h ^ digits[j]) * FNV_PRIME
        w = <double>(h >> 11) * INV_2_53
        if alpha != 1.0:
            w = pow(w, alpha)
        if v == 0:
            w = w * eos_weight
        out[v] = w
        total += w
    for v in range(vocab_size):
        if out[v] > 0.0:
            out[v] = log(out[v] / total)
        else:
            out[v] = LOG_FLOOR


def hash_logprobs_batch(list prefixes, Py_ssize_t vocab_size, double alpha, double eos_weight):
    """Log-distributions for each hashed context prefix (bytes ending in ``|``)."""
    cdef Py_ssize_t n = len(prefixes), r
    out = np.empty((n, vocab_size), dtype=np.float64)
    cdef double[:, ::1] view = out
    cdef uint64_t state
    for r in range(n):
        state = _update(FNV_OFFSET, prefixes[r])
        _fill_row(state, vocab_size, alpha, eos_weight, view[r])
    return out
