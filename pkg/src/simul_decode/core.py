"""Value types shared across the decoder: vocabularies, hypotheses, beams, traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

EOS = "</s>"
EOS_ID = 0


class SimulDecodeError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SimulDecodeError, ValueError):
    def __init__(self, message, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.offset = offset


class ValidationError(SimulDecodeError, ValueError):
    pass


class InvalidTokenError(SimulDecodeError, ValueError):
    pass


class VocabularyError(InvalidTokenError):
    """A token string is not part of the vocabulary."""

    def __init__(self, message, token=None, position=None):
        super().__init__(message)
        self.token = token
        self.position = position


class ContractViolation(SimulDecodeError, ValueError):
    pass


class PolicyContractError(SimulDecodeError):
    pass


class InstanceTooLargeError(SimulDecodeError):
    pass


class UndefinedMetricError(SimulDecodeError, ValueError):
    pass


@dataclass(frozen=True)
class Vocab:
    """Ordered symbol table; index 0 is always the end-of-sequence marker."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise ValidationError("vocabulary needs eos plus at least one token")
        if symbols[0] != EOS:
            raise ValidationError(f"vocabulary must start with {EOS!r}, got {symbols[0]!r}")
        if any(not s or any(c.isspace() for c in s) for s in symbols):
            raise ValidationError("vocabulary symbols must be non-empty and contain no whitespace")
        if len(set(symbols)) != len(symbols):
            raise ValidationError("vocabulary symbols must be unique")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Vocab":
        """Build a vocab from content tokens, prepending eos if it is missing."""
        tokens = list(tokens)
        if not tokens or tokens[0] != EOS:
            tokens = [EOS] + [t for t in tokens if t != EOS]
        return cls(tuple(tokens))

    @property
    def eos_id(self) -> int:
        return EOS_ID

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, token):
        return token in self._index

    def id(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise VocabularyError(f"unknown token {token!r}", token=token) from None

    def encode(self, tokens: Sequence[str]) -> list[int]:
        out = []
        for pos, tok in enumerate(tokens):
            if tok not in self._index:
                raise VocabularyError(f"unknown token {tok!r} at position {pos}", tok, pos)
            out.append(self._index[tok])
        return out

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.symbols[i] for i in ids]


@dataclass(frozen=True, slots=True)
class Hypothesis:
    """A target prefix with its accumulated natural-log score."""

    tokens: tuple[int, ...] = ()
    log_score: float = 0.0

    @property
    def finished(self) -> bool:
        return bool(self.tokens) and self.tokens[-1] == EOS_ID

    def sort_key(self):
        return (-self.log_score, self.tokens)


# A beam is a plain list of hypotheses kept in sort_key order.
Beam = list


def compare_hypotheses(a: Hypothesis, b: Hypothesis) -> int:
    """Return -1 if ``a`` ranks before ``b``, 1 if after, 0 if identical."""
    ka, kb = a.sort_key(), b.sort_key()
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


def check_beam(beam: Sequence[Hypothesis], b: int) -> None:
    """Raise ContractViolation unless ``beam`` is a well-formed beam of width ``b``."""
    if not 1 <= len(beam) <= b:
        raise ContractViolation(f"beam holds {len(beam)} items, width is {b}")
    keys = [h.sort_key() for h in beam]
    if any(keys[i] > keys[i + 1] for i in range(len(keys) - 1)):
        raise ContractViolation("beam is not in descending score order")


# --- decode traces -------------------------------------------------------


@dataclass(frozen=True)
class Read:
    token: int
    source_index: int


@dataclass(frozen=True)
class Commit:
    token: int
    g: int
    logp: float


@dataclass(frozen=True)
class Speculate:
    window: tuple[int, ...]


@dataclass(frozen=True)
class TailStart:
    pass


Event = Union[Read, Commit, Speculate, TailStart]


def event_to_json(ev: Event) -> str:
    if isinstance(ev, Read):
        d = {"type": "read", "token": ev.token, "source_index": ev.source_index}
    elif isinstance(ev, Commit):
        d = {"type": "commit", "token": ev.token, "g": ev.g, "logp": ev.logp}
    elif isinstance(ev, Speculate):
        d = {"type": "speculate", "window": list(ev.window)}
    elif isinstance(ev, TailStart):
        d = {"type": "tail_start"}
    else:
        raise TypeError(f"not a trace event: {ev!r}")
    return json.dumps(d, separators=(",", ":"), ensure_ascii=False)


def event_from_json(line: str) -> Event:
    d = json.loads(line)
    kind = d.get("type")
    if kind == "read":
        return Read(int(d["token"]), int(d["source_index"]))
    if kind == "commit":
        return Commit(int(d["token"]), int(d["g"]), float(d["logp"]))
    if kind == "speculate":
        return Speculate(tuple(int(t) for t in d["window"]))
    if kind == "tail_start":
        return TailStart()
    raise ParseError(f"unknown event type {kind!r}")


@dataclass
class DecodeTrace:
    """Append-only log of what a simultaneous decode read, committed and speculated."""

    events: list = field(default_factory=list)

    def read(self, token: int, source_index: int) -> None:
        self.events.append(Read(token, source_index))

    def commit(self, token: int, g: int, logp: float) -> None:
        commits = [e for e in self.events if isinstance(e, Commit)]
        if commits and g < commits[-1].g:
            raise ContractViolation("g must be non-decreasing across commits")
        if g > self.source_length:
            raise ContractViolation("commit references unread source")
        self.events.append(Commit(token, g, float(logp)))

    def speculate(self, window: Sequence[int]) -> None:
        self.events.append(Speculate(tuple(window)))

    def tail_start(self) -> None:
        self.events.append(TailStart())

    @property
    def source(self) -> list[int]:
        return [e.token for e in self.events if isinstance(e, Read)]

    @property
    def source_length(self) -> int:
        return sum(1 for e in self.events if isinstance(e, Read))

    @property
    def output(self) -> list[int]:
        return [e.token for e in self.events if isinstance(e, Commit)]

    @property
    def delays(self) -> list[int]:
        """g(t) for every committed target token."""
        return [e.g for e in self.events if isinstance(e, Commit)]

    def actions(self) -> str:
        """The READ/WRITE sequence actually executed, as a string of R and W."""
        return "".join("R" if isinstance(e, Read) else "W"
                       for e in self.events if isinstance(e, (Read, Commit)))

    def commits_before_tail(self) -> list[Commit]:
        out = []
        for e in self.events:
            if isinstance(e, TailStart):
                break
            if isinstance(e, Commit):
                out.append(e)
        return out

    def to_lines(self) -> Iterator[str]:
        return (event_to_json(e) for e in self.events)

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.to_lines())

    @classmethod
    def loads(cls, text: str) -> "DecodeTrace":
        return cls([event_from_json(line) for line in text.splitlines() if line.strip()])


def split_traces(text: str) -> list[DecodeTrace]:
    """Split a concatenated multi-sentence trace file into per-sentence traces.

    Each decode begins with the read of source index 0, which marks the boundary.
    """
    traces: list[DecodeTrace] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        ev = event_from_json(line)
        if isinstance(ev, Read) and ev.source_index == 0 or not traces:
            traces.append(DecodeTrace())
        traces[-1].events.append(ev)
    return traces
