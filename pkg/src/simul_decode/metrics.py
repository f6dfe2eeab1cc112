"""Latency metrics (AL, CW), sequence scoring and corpus BLEU."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import EOS_ID, ContractViolation, UndefinedMetricError
from .policy import READ, actions_from_string, chunk_lengths

CSV_COLUMNS = ("policy", "k", "b", "w", "mode", "AL", "CW", "BLEU", "mean_logprob", "tokens_per_sec")


@dataclass(frozen=True)
class LatencyInputs:
    g: tuple
    m: int
    n: Optional[int] = None

    def __post_init__(self):
        g = tuple(int(x) for x in self.g)
        object.__setattr__(self, "g", g)
        if self.n is None:
            object.__setattr__(self, "n", len(g))
        if not g:
            raise UndefinedMetricError("no committed target tokens")
        if any(not 1 <= x <= self.m for x in g):
            raise ContractViolation("every g(t) must lie in [1, m]")
        if any(a > b for a, b in zip(g, g[1:])):
            raise ContractViolation("g must be non-decreasing")


def average_lagging(inp: LatencyInputs, ref_len: Optional[int] = None) -> float:
    """Average Lagging over the target positions up to the first full-source commit.

    The target/source rate uses the generated length unless ``ref_len`` is given.
    """
    g, m = inp.g, inp.m
    n = ref_len if ref_len is not None else inp.n
    r = n / m
    tau = next((t for t, x in enumerate(g, 1) if x == m), len(g))
    return sum(g[t - 1] - (t - 1) / r for t in range(1, tau + 1)) / tau


def consecutive_wait(actions) -> float:
    """Mean length of maximal READ runs."""
    actions = list(actions)
    if READ not in actions:
        raise UndefinedMetricError("consecutive wait needs at least one READ")
    read_runs, _ = chunk_lengths(actions)
    return sum(read_runs) / len(read_runs)


def trace_latency(trace):
    """(AL, CW) of a decode trace."""
    al = average_lagging(LatencyInputs(trace.delays, trace.source_length))
    cw = consecutive_wait(actions_from_string(trace.actions()))
    return al, cw


def sequence_logprob(model, source, y) -> float:
    """Sum of log p(y_t | full source, y_<t) over ``y`` (which must end in eos)."""
    y = list(y)
    if not y or y[-1] != EOS_ID:
        raise ContractViolation("sequence must end with eos")
    total = 0.0
    for t, tok in enumerate(y):
        total += float(model.score_next(source, y[:t])[tok])
    return total


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(candidates: Sequence[Sequence], references: Sequence[Sequence[Sequence]], max_n=4) -> float:
    """Corpus-level BLEU in [0, 1] with clipped n-gram counts and brevity penalty."""
    if not candidates:
        raise ContractViolation("need at least one candidate")
    if len(candidates) != len(references):
        raise ContractViolation("candidates and references differ in length")
    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = ref_len = 0
    for cand, refs in zip(candidates, references):
        cand = list(cand)
        refs = [list(r) for r in refs]
        cand_len += len(cand)
        # closest reference length, shorter wins ties
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            counts = _ngrams(cand, n)
            best = Counter()
            for r in refs:
                best |= _ngrams(r, n)
            matches[n - 1] += sum(min(c, best[g]) for g, c in counts.items())
            totals[n - 1] += max(len(cand) - n + 1, 0)
    if cand_len == 0 or any(m == 0 for m in matches):
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / cand_len)
    return bp * math.exp(log_p)
