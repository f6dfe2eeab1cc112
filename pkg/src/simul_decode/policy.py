"""READ/WRITE policies for simultaneous decoding."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import groupby
from typing import Optional

import numpy as np

from .core import EOS_ID, ParseError


class Action(enum.Enum):
    READ = "R"
    WRITE = "W"

    def __repr__(self):
        return self.value


READ, WRITE = Action.READ, Action.WRITE


@dataclass(frozen=True)
class PolicyState:
    s_read: int
    t_written: int
    source_exhausted: bool = False
    last_commit_logp: Optional[float] = None
    source_prefix: tuple = ()
    committed: tuple = ()


class Policy:
    """A per-session decision source. Subclasses implement ``next_action``."""

    name = "policy"

    def next_action(self, state: PolicyState) -> Action:
        raise NotImplementedError

    def pending_writes(self, state: PolicyState) -> int:
        """How many consecutive WRITEs are known to follow; live policies only know 1."""
        return 1


@dataclass
class WaitK(Policy):
    """Read ``k`` source tokens, then alternate WRITE/READ; write-only once the source ends."""

    k: int
    name = "wait-k"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def next_action(self, state):
        if state.source_exhausted:
            return WRITE
        return READ if state.s_read < self.k + state.t_written else WRITE


@dataclass
class Schedule(Policy):
    """Replays a fixed action list; falls back to READ once it runs out."""

    actions: list = field(default_factory=list)
    name = "schedule"

    def _pos(self, state):
        return state.s_read + state.t_written

    def next_action(self, state):
        if state.source_exhausted:
            return WRITE
        pos = self._pos(state)
        return self.actions[pos] if pos < len(self.actions) else READ

    def pending_writes(self, state):
        pos = self._pos(state)
        n = 0
        while pos + n < len(self.actions) and self.actions[pos + n] is WRITE:
            n += 1
        return max(n, 1)


@dataclass
class ThresholdAdaptive(Policy):
    """WRITE while the model's best non-eos next-token log-prob is at least ``rho``."""

    model: object
    rho: float = -1.0
    name = "threshold"

    def __post_init__(self):
        if self.rho > 0:
            raise ValueError("rho is a log-probability threshold and must be <= 0")

    def next_action(self, state):
        if state.source_exhausted:
            return WRITE
        if state.s_read == 0:
            return READ
        logp = self.model.score_next(state.source_prefix, state.committed)
        best = float(np.max(np.delete(logp, EOS_ID)))
        return WRITE if best >= self.rho else READ


def wait_k_actions(k, m, n):
    """The full wait-k action list for a source of length ``m`` and target of length ``n``."""
    if k < 1 or m < 1 or n < 1:
        raise ValueError("k, m and n must all be >= 1")
    out = []
    reads = writes = 0
    while writes < n:
        if reads < m and reads < k + writes:
            out.append(READ)
            reads += 1
        else:
            out.append(WRITE)
            writes += 1
    out.extend([READ] * (m - reads))
    return out


def parse_schedule(text: str) -> list:
    out = []
    for offset, ch in enumerate(text):
        if ch.isspace():
            continue
        if ch not in "RW":
            raise ParseError(f"unexpected character {ch!r} in schedule", offset=offset)
        out.append(Action(ch))
    return out


def load_schedule(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return parse_schedule(fh.read())


def chunk_lengths(actions):
    """Maximal run lengths of READs and of WRITEs, each in order."""
    if not actions:
        raise ValueError("empty action list")
    read_runs, write_runs = [], []
    for act, run in groupby(actions):
        (read_runs if act is READ else write_runs).append(sum(1 for _ in run))
    return read_runs, write_runs


def actions_from_string(s: str) -> list:
    return [Action(c) for c in s]
