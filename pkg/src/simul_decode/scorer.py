"""Incremental conditional scorers p(y_t | x_<=s, y_<t).

Two deterministic reference models are provided: a tabular model read from a
small text file, and a seeded hash model used to generate test instances.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _hashkern_py
from .core import (EOS_ID, InvalidTokenError, ParseError, ValidationError, Vocab,
                   VocabularyError)

try:
    from . import _hashkern as _compiled
except ImportError:  # pragma: no cover - exercised only without a C toolchain
    _compiled = None

LOG_FLOOR = -1e9

_KERNELS = {"python": _hashkern_py}
if _compiled is not None:
    _KERNELS["compiled"] = _compiled


def available_backends() -> list[str]:
    return sorted(_KERNELS)


def default_backend() -> str:
    """Kernel used when none is requested; ``SIMUL_DECODE_BACKEND`` overrides."""
    forced = os.environ.get("SIMUL_DECODE_BACKEND")
    if forced:
        if forced not in _KERNELS:
            raise ValueError(f"backend {forced!r} unavailable; have {available_backends()}")
        return forced
    return "compiled" if "compiled" in _KERNELS else "python"


class Scorer:
    """Interface every scoring model implements.

    ``score_next`` returns a complete, normalized natural-log distribution over
    the target vocabulary and must be a pure function of its arguments.
    """

    vocab_size: int
    eos_id: int = EOS_ID

    def score_next(self, source_prefix: Sequence[int], target_prefix: Sequence[int]) -> np.ndarray:
        return self.score_batch(source_prefix, [target_prefix])[0]

    def score_batch(self, source_prefix, target_prefixes) -> np.ndarray:
        """Stack of ``score_next`` rows for several target prefixes sharing one source."""
        return np.stack([self.score_next(source_prefix, t) for t in target_prefixes])

    def check_source(self, source_prefix):
        pass

    def check_target(self, target_prefix):
        for t in target_prefix:
            if not 0 <= t < self.vocab_size:
                raise InvalidTokenError(f"target token id {t} outside vocab of size {self.vocab_size}")


# --- hash model ----------------------------------------------------------


def hash_context(seed, source_prefix, target_prefix) -> bytes:
    """The hashed byte string ``seed|p1,p2,...|q1,q2,...|`` (token id appended later)."""
    return (f"{seed}|{','.join(map(str, source_prefix))}|"
            f"{','.join(map(str, target_prefix))}|").encode()


def hash_model_logits(seed, source_prefix, target_prefix, vocab_size, alpha=1.0,
                      eos_weight=1.0, backend=None) -> np.ndarray:
    if vocab_size < 2:
        raise ValueError("vocab_size must be at least 2")
    kern = _KERNELS[backend or default_backend()]
    return kern.hash_logprobs_batch([hash_context(seed, source_prefix, target_prefix)],
                                    vocab_size, float(alpha), float(eos_weight))[0]


@dataclass(frozen=True)
class HashModel(Scorer):
    """Pseudo-random but fully reproducible scorer keyed by FNV-1a hashes.

    Each token's unnormalized weight is ``u**alpha`` where ``u`` is a uniform
    value derived from the hash of the context and the token id. Larger
    ``alpha`` gives peakier distributions; ``eos_weight`` scales the eos entry.
    """

    seed: int
    vocab_size: int
    alpha: float = 1.0
    eos_weight: float = 1.0
    backend: str = field(default_factory=default_backend)

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ValidationError("vocab_size must be at least 2")
        if not self.alpha > 0:
            raise ValidationError("alpha must be positive")
        if self.eos_weight < 0:
            raise ValidationError("eos_weight must be non-negative")
        if self.backend not in _KERNELS:
            raise ValueError(f"backend {self.backend!r} unavailable")

    def check_source(self, source_prefix):
        for s in source_prefix:
            if s < 0:
                raise InvalidTokenError(f"source token id {s} is negative")

    def score_next(self, source_prefix, target_prefix):
        return self.score_batch(source_prefix, [target_prefix])[0]

    def score_batch(self, source_prefix, target_prefixes):
        self.check_source(source_prefix)
        head = f"{self.seed}|{','.join(map(str, source_prefix))}|"
        prefixes = []
        for t in target_prefixes:
            self.check_target(t)
            prefixes.append(f"{head}{','.join(map(str, t))}|".encode())
        kern = _KERNELS[self.backend]
        return kern.hash_logprobs_batch(prefixes, self.vocab_size, float(self.alpha),
                                        float(self.eos_weight))


# --- tabular model -------------------------------------------------------


@dataclass(frozen=True)
class TabularModel(Scorer):
    """Explicit conditional tables keyed by (revealed source length, target suffix).

    Lookup caps the source length at ``s_max`` and backs off from the last
    ``order`` target tokens to successively shorter suffixes, then to uniform.
    """

    src_vocab: Vocab
    tgt_vocab: Vocab
    order: int
    s_max: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 0 or self.s_max < 0:
            raise ValidationError("order and s_max must be non-negative")
        logs = {}
        for key, probs in self.entries.items():
            probs = np.asarray(probs, dtype=np.float64)
            if probs.shape != (len(self.tgt_vocab),):
                raise ValidationError(f"context {key}: distribution has wrong length")
            if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-6:
                raise ValidationError(f"context {key}: probabilities must be >= 0 and sum to 1")
            probs = probs / probs.sum()
            row = np.full(len(probs), LOG_FLOOR)
            row[probs > 0] = np.log(probs[probs > 0])
            row.setflags(write=False)
            logs[key] = row
        object.__setattr__(self, "_logs", logs)
        uniform = np.full(len(self.tgt_vocab), -math.log(len(self.tgt_vocab)))
        uniform.setflags(write=False)
        object.__setattr__(self, "_uniform", uniform)

    @property
    def vocab_size(self):
        return len(self.tgt_vocab)

    def check_source(self, source_prefix):
        for s in source_prefix:
            if not 0 <= s < len(self.src_vocab):
                raise InvalidTokenError(f"source token id {s} outside vocab of size {len(self.src_vocab)}")

    def lookup(self, s: int, target_prefix: Sequence[int]) -> np.ndarray:
        s = min(s, self.s_max)
        suffix = tuple(target_prefix[len(target_prefix) - self.order:]) if self.order else ()
        if len(suffix) > len(target_prefix):
            suffix = tuple(target_prefix)
        for cut in range(len(suffix) + 1):
            row = self._logs.get((s, suffix[cut:]))
            if row is not None:
                return row
        return self._uniform

    def score_next(self, source_prefix, target_prefix):
        self.check_source(source_prefix)
        self.check_target(target_prefix)
        return self.lookup(len(source_prefix), target_prefix).copy()

    def score_batch(self, source_prefix, target_prefixes):
        self.check_source(source_prefix)
        rows = []
        for t in target_prefixes:
            self.check_target(t)
            rows.append(self.lookup(len(source_prefix), t))
        return np.stack(rows)


_CTX = re.compile(r"^ctx\s+s=(-?\d+)\s*\[([^\]]*)\]\s*$")


def parse_tabular_model(text: str) -> TabularModel:
    header: dict[str, str] = {}
    raw_entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("ctx"):
            if "::" not in line:
                raise ParseError("entry line lacks '::'", line=lineno)
            left, right = line.split("::", 1)
            m = _CTX.match(left.strip())
            if not m:
                raise ParseError(f"malformed context {left.strip()!r}", line=lineno)
            pairs = []
            for item in right.split():
                tok, eq, val = item.rpartition("=")
                if not eq or not tok:
                    raise ParseError(f"expected tok=prob, got {item!r}", line=lineno)
                try:
                    prob = float(val)
                except ValueError:
                    raise ParseError(f"bad probability {val!r}", line=lineno) from None
                pairs.append((tok, prob))
            raw_entries.append((lineno, int(m.group(1)), m.group(2).split(), pairs))
            continue
        key, colon, value = line.partition(":")
        if not colon or key.strip() not in ("src_vocab", "tgt_vocab", "order", "s_max"):
            raise ParseError(f"unrecognized line {line!r}", line=lineno)
        header[key.strip()] = value.strip()

    missing = {"src_vocab", "tgt_vocab", "order", "s_max"} - header.keys()
    if missing:
        raise ParseError(f"missing header field(s): {', '.join(sorted(missing))}")
    try:
        order, s_max = int(header["order"]), int(header["s_max"])
    except ValueError:
        raise ParseError("order and s_max must be integers") from None
    src_vocab = Vocab.from_tokens(header["src_vocab"].split())
    tgt_vocab = Vocab(tuple(header["tgt_vocab"].split()))

    entries = {}
    for lineno, s, suffix, pairs in raw_entries:
        if len(suffix) > order:
            raise ValidationError(f"line {lineno}: suffix longer than order {order}")
        try:
            key = (min(s, s_max), tuple(tgt_vocab.encode(suffix)))
            probs = np.zeros(len(tgt_vocab))
            for tok, prob in pairs:
                probs[tgt_vocab.id(tok)] += prob
        except VocabularyError as exc:
            raise VocabularyError(f"line {lineno}: {exc}", exc.token) from None
        total = probs.sum()
        ctx = f"ctx s={s} [{' '.join(suffix)}]"
        if (probs < 0).any() or abs(total - 1.0) > 1e-6:
            raise ValidationError(f"line {lineno}: distribution for {ctx} sums to {total:g}")
        if key in entries:
            raise ValidationError(f"line {lineno}: duplicate context {ctx}")
        entries[key] = probs
    return TabularModel(src_vocab, tgt_vocab, order, s_max, entries)


def load_tabular_model(path) -> TabularModel:
    with open(path, encoding="utf-8") as fh:
        return parse_tabular_model(fh.read())


def bundled_model_path(name: str) -> str:
    """Path of a model file shipped in ``simul_decode/data`` (e.g. ``garden_path``)."""
    return os.path.join(os.path.dirname(__file__), "data", f"{name}.tab")
