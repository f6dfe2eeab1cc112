"""Beam transitions and full-sentence baselines (greedy, beam search)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EOS_ID, ContractViolation, Hypothesis


@dataclass
class SearchStats:
    """Counts live hypothesis tokens held in beams, for the memory bound checks."""

    peak_tokens: int = 0
    peak_items: int = 0
    transitions: int = 0

    def observe(self, beam):
        self.transitions += 1
        self.peak_items = max(self.peak_items, len(beam))
        self.peak_tokens = max(self.peak_tokens, sum(len(h.tokens) for h in beam))

    def reset(self):
        self.peak_tokens = self.peak_items = self.transitions = 0


def next_step(model, source_prefix, beam, b, allow_eos=True, force_eos=False, stats=None):
    """One beam transition: top-``b`` of all one-token extensions plus frozen finished items.

    ``allow_eos=False`` removes eos from the candidate extensions entirely;
    ``force_eos=True`` leaves eos as the only candidate (the max-length step).
    """
    if not beam:
        raise ContractViolation("cannot extend an empty beam")
    if b < 1:
        raise ContractViolation("beam size must be >= 1")
    live = [h for h in beam if not h.finished]
    frozen = [h for h in beam if h.finished]
    if not live:
        out = sorted(beam, key=Hypothesis.sort_key)[:b]
        if stats is not None:
            stats.observe(out)
        return out

    logp = model.score_batch(source_prefix, [h.tokens for h in live])
    scores = np.array([h.log_score for h in live])[:, None] + logp
    if force_eos:
        keep = np.full(scores.shape[1], -np.inf)
        keep[EOS_ID] = 0.0
        scores = scores + keep
    elif not allow_eos:
        scores[:, EOS_ID] = -np.inf

    flat = scores.ravel()
    n_valid = int(np.count_nonzero(flat > -np.inf))
    frozen_scores = np.array([h.log_score for h in frozen])
    if n_valid + len(frozen) > b:
        # b-th best score overall; everything tied with it goes to the exact sort
        pool = np.concatenate([flat, frozen_scores])
        threshold = np.partition(pool, len(pool) - b)[len(pool) - b]
        idx = np.flatnonzero(flat >= threshold)
        frozen = [h for h in frozen if h.log_score >= threshold]
    else:
        idx = np.flatnonzero(flat > -np.inf)

    vocab = scores.shape[1]
    cands = [(-float(flat[i]), live[i // vocab].tokens + (int(i % vocab),)) for i in idx]
    cands.extend(h.sort_key() for h in frozen)
    cands.sort()
    out = [Hypothesis(tokens, -neg) for neg, tokens in cands[:b]]
    if stats is not None:
        stats.observe(out)
    return out


def next_multi(model, source_prefix, beam, b, i, allow_eos=True, stats=None):
    """Apply ``next_step`` ``i`` times; ``i == 0`` returns the beam unchanged."""
    if i < 0:
        raise ContractViolation("step count must be >= 0")
    for _ in range(i):
        beam = next_step(model, source_prefix, beam, b, allow_eos=allow_eos, stats=stats)
    return beam


def argmax_token(logp, allow_eos=True):
    """Best token id; ties go to the smaller id."""
    if allow_eos:
        return int(np.argmax(logp))
    return 1 + int(np.argmax(logp[1:]))


def greedy_decode(model, source, max_len):
    """Argmax decoding until eos; at step ``max_len`` only eos may be emitted."""
    if max_len < 1:
        raise ContractViolation("max_len must be >= 1")
    tokens: list[int] = []
    score = 0.0
    while True:
        logp = model.score_next(source, tokens)
        tok = EOS_ID if len(tokens) == max_len - 1 else argmax_token(logp)
        tokens.append(tok)
        score += float(logp[tok])
        if tok == EOS_ID:
            return tokens, score


def beam_search(model, source, start, b, steps, length_reward=0.0, stats=None):
    """Beam search from the prefix ``start`` for at most ``steps`` tokens.

    Finished hypotheses stay frozen in the beam; the search halts once the best
    unfinished score can no longer beat the best finished one, and the last
    step only admits eos. Returns the best finished hypothesis seen in-beam.
    """
    if steps < 1:
        raise ContractViolation("need at least one step")
    beam = [Hypothesis(tuple(start), 0.0)]
    best = None

    def key(h):
        return (-(h.log_score + length_reward * len(h.tokens)), h.tokens)

    for t in range(1, steps + 1):
        beam = next_step(model, source, beam, b, allow_eos=True, force_eos=(t == steps),
                         stats=stats)
        for h in beam:
            if h.finished and (best is None or key(h) < key(best)):
                best = h
        unfinished = [h for h in beam if not h.finished]
        if not unfinished:
            break
        if length_reward == 0.0 and best is not None and unfinished[0].log_score <= best.log_score:
            break
    return best


def beam_search_full(model, source, b, max_len, length_reward=0.0, stats=None):
    """Full-sentence beam search; returns (tokens, log_score) of the best finished hypothesis."""
    if b < 1:
        raise ContractViolation("beam size must be >= 1")
    best = beam_search(model, source, (), b, max_len, length_reward, stats)
    return list(best.tokens), best.log_score
