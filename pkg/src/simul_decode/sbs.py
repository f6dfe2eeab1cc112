"""Speculative beam search (SBS) and the simultaneous decoding loop.

At each commit point SBS runs a beam search ``n + w`` steps past the committed
prefix, commits the first ``n`` tokens of the best hypothesis and throws the
remaining ``w`` speculated tokens away. The next commit restarts from the
committed prefix alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .beam import argmax_token, beam_search, next_multi, next_step
from .core import EOS_ID, ContractViolation, DecodeTrace, Hypothesis, PolicyContractError
from .policy import READ, WRITE, Action, PolicyState

COMMIT_MODES = ("greedy", "sbs", "chunk_beam", "chunk_sbs")


@dataclass(frozen=True)
class SbsConfig:
    b: int = 5
    w: int = 2
    allow_early_eos: bool = False
    commit_mode: str = "sbs"
    max_len: Optional[int] = None
    max_len_ratio: float = 2.0
    max_len_offset: int = 5
    length_reward: float = 0.0

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("beam size b must be >= 1")
        if self.w < 0:
            raise ValueError("window w must be >= 0")
        if self.max_len is not None and self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.commit_mode not in COMMIT_MODES:
            raise ValueError(f"commit_mode must be one of {COMMIT_MODES}")

    def max_len_for(self, m: int) -> int:
        """Output length cap for a source of length ``m`` (default 2m+5)."""
        if self.max_len is not None:
            return self.max_len
        return max(1, math.floor(self.max_len_ratio * m + self.max_len_offset))


def _lookahead(model, source_prefix, committed, depth, cfg, source_complete, stats):
    """Beam search ``depth`` steps past ``committed``; returns the final beam.

    While the source is incomplete (and early eos is disallowed) eos is not a
    candidate. With eos allowed, the horizon is clipped at the length cap and
    the step reaching the cap admits eos only.
    """
    masked = not cfg.allow_early_eos and not source_complete
    beam = [Hypothesis(tuple(committed), 0.0)]
    if masked:
        steps, cap_step = depth, None
    else:
        remaining = max(1, cfg.max_len_for(len(source_prefix)) - len(committed))
        steps = min(depth, remaining)
        cap_step = remaining if steps == remaining else None
    for t in range(1, steps + 1):
        beam = next_step(model, source_prefix, beam, cfg.b, allow_eos=not masked,
                         force_eos=(t == cap_step), stats=stats)
        if not beam:
            return None
    return beam


def sbs_step(model, source_prefix, committed, cfg, source_complete=False, stats=None):
    """Commit one token chosen by its best score ``w`` steps later.

    Returns ``(token, speculation, score)``; ``speculation`` is only for logging.
    """
    chunk, spec, score = _speculate(model, source_prefix, committed, 1, cfg, source_complete, stats)
    return chunk[0], spec, score


def chunk_sbs(model, source_prefix, committed, n, cfg, source_complete=False, stats=None):
    """Commit a chunk of ``n`` tokens chosen by the best hypothesis ``n + w`` steps out.

    Returns ``(tokens, speculation, score)``. The chunk stops early at eos.
    """
    if n < 1:
        raise ContractViolation("chunk length must be >= 1")
    return _speculate(model, source_prefix, committed, n, cfg, source_complete, stats)


def _speculate(model, source_prefix, committed, n, cfg, source_complete, stats):
    committed = tuple(committed)
    if committed and committed[-1] == EOS_ID:
        raise ContractViolation("committed prefix is already finished")
    if not source_prefix:
        raise ContractViolation("nothing has been read yet")
    beam = _lookahead(model, source_prefix, committed, n + cfg.w, cfg, source_complete, stats)
    if beam is None:
        # every candidate was masked out: plain argmax, eos allowed
        logp = model.score_next(source_prefix, committed)
        tok = argmax_token(logp)
        return (tok,), (), float(logp[tok])
    top = beam[0]
    ext = top.tokens[len(committed):]
    chunk = ext[:n]
    if EOS_ID in chunk:
        chunk = chunk[: chunk.index(EOS_ID) + 1]
        spec = ()
    else:
        spec = ext[n:]
    return chunk, spec, top.log_score


def chunk_beam_search(model, source_prefix, committed, n, cfg, source_complete=False, stats=None):
    """Conventional per-chunk beam search: best ``n``-step continuation, no speculation."""
    masked = not cfg.allow_early_eos and not source_complete
    committed = tuple(committed)
    beam = next_multi(model, source_prefix, [Hypothesis(committed, 0.0)], cfg.b, n,
                      allow_eos=not masked, stats=stats)
    top = beam[0]
    chunk = top.tokens[len(committed):]
    if EOS_ID in chunk:
        chunk = chunk[: chunk.index(EOS_ID) + 1]
    return chunk, top.log_score


def greedy_step(model, source_prefix, committed, cfg, source_complete=False):
    masked = not cfg.allow_early_eos and not source_complete
    logp = model.score_next(source_prefix, committed)
    tok = argmax_token(logp, allow_eos=not masked)
    return tok, float(logp[tok])


def tail_beam_search(model, full_source, committed, cfg, stats=None):
    """Beam search over the rest of the target once the whole source is known.

    Returns only the new suffix (ending in eos) and its incremental score.
    """
    committed = tuple(committed)
    steps = max(1, cfg.max_len_for(len(full_source)) - len(committed))
    best = beam_search(model, full_source, committed, cfg.b, steps, cfg.length_reward, stats)
    return list(best.tokens[len(committed):]), best.log_score


def full_sentence_sbs(model, source, cfg, stats=None):
    """Sliding-window SBS over a fully known source, one committed token per step."""
    source = list(source)
    committed: list[int] = []
    score = 0.0
    while True:
        tok, _, _ = sbs_step(model, source, committed, cfg, source_complete=True, stats=stats)
        score += float(model.score_next(source, committed)[tok])
        committed.append(tok)
        if tok == EOS_ID:
            return committed, score


def simul_decode(model, source: Iterable[int], policy, cfg: SbsConfig, stats=None) -> DecodeTrace:
    """Run one simultaneous decode session and return its trace.

    The source is pulled lazily, one token per READ. A READ that finds the
    stream exhausted starts the tail: a conventional beam search over the rest
    of the target with the full source.
    """
    stream = iter(source)
    src: list[int] = []
    committed: list[int] = []
    trace = DecodeTrace()
    last_logp = None

    def commit(tokens):
        nonlocal last_logp
        for tok in tokens:
            logp = float(model.score_next(src, committed)[tok])
            trace.commit(tok, len(src), logp)
            committed.append(tok)
            last_logp = logp

    while True:
        state = PolicyState(len(src), len(committed), False, last_logp, tuple(src), tuple(committed))
        action = policy.next_action(state)
        if not isinstance(action, Action):
            raise PolicyContractError(f"policy returned {action!r}, not an Action")
        # keep room for the final eos: past the length cap, writes wait for more source
        if action is WRITE and len(committed) >= cfg.max_len_for(len(src)) - 1:
            action = READ
        if action is READ:
            try:
                tok = next(stream)
            except StopIteration:
                break
            model.check_source([tok])
            src.append(tok)
            trace.read(tok, len(src) - 1)
            continue
        if not src:
            raise PolicyContractError("policy wrote before reading any source")

        mode = cfg.commit_mode
        if mode == "greedy":
            tok, _ = greedy_step(model, src, committed, cfg)
            commit([tok])
            continue
        if mode == "sbs":
            tok, spec, _ = sbs_step(model, src, committed, cfg, stats=stats)
            chunk = (tok,)
        else:
            room = cfg.max_len_for(len(src)) - 1 - len(committed)
            n = max(1, min(policy.pending_writes(state), room))
            if mode == "chunk_beam":
                chunk, _ = chunk_beam_search(model, src, committed, n, cfg, stats=stats)
                spec = ()
            else:
                chunk, spec, _ = chunk_sbs(model, src, committed, n, cfg, stats=stats)
        commit(chunk)
        if spec:
            trace.speculate(spec)
        if committed[-1] == EOS_ID:
            return trace

    if not src:
        raise ValueError("source stream was empty")
    trace.tail_start()
    suffix, _ = tail_beam_search(model, src, committed, cfg, stats=stats)
    commit(suffix)
    return trace
