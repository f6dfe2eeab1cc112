"""Brute-force reference searches, used to check the beam and SBS code paths.

Scores are accumulated token by token from single ``score_next`` calls so the
float sums match the beam code exactly.
"""
from __future__ import annotations

from .core import EOS_ID, InstanceTooLargeError

GUARD = 10 ** 6


def _check(vocab_size, depth):
    if (vocab_size - 1) ** depth > GUARD:
        raise InstanceTooLargeError(
            f"{vocab_size - 1}^{depth} paths exceeds the enumeration guard of {GUARD}")


def enumerate_best(model, source, max_len):
    """Best eos-terminated sequence of length <= ``max_len`` by exhaustive search."""
    V = model.vocab_size
    _check(V, max_len)
    best = None

    def visit(prefix, score):
        nonlocal best
        logp = model.score_next(source, prefix)
        done = prefix + (EOS_ID,)
        cand = (-(score + float(logp[EOS_ID])), done)
        if best is None or cand < best:
            best = cand
        if len(prefix) + 1 < max_len:
            for v in range(1, V):
                visit(prefix + (v,), score + float(logp[v]))

    visit((), 0.0)
    return list(best[1]), -best[0]


def enumerate_lookahead(model, source_prefix, committed, depth, mask_eos=True):
    """First token of the best ``depth``-step continuation of ``committed``.

    Without masking, a path may end early in eos and then stays as is.
    """
    V = model.vocab_size
    _check(V, depth)
    committed = tuple(committed)
    best = None

    def visit(prefix, score, left):
        nonlocal best
        if left == 0:
            cand = (-score, prefix)
            if best is None or cand < best:
                best = cand
            return
        logp = model.score_next(source_prefix, prefix)
        for v in range(1 if mask_eos else 0, V):
            s = score + float(logp[v])
            if v == EOS_ID:
                cand = (-s, prefix + (v,))
                if best is None or cand < best:
                    best = cand
            else:
                visit(prefix + (v,), s, left - 1)

    visit(committed, 0.0, depth)
    return best[1][len(committed)]
