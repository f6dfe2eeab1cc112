import itertools
import math

import numpy as np
import pytest

from simul_decode import HashModel, enumerate_best, enumerate_lookahead
from simul_decode.core import InstanceTooLargeError
from simul_decode.scorer import parse_tabular_model


def test_chain(chain):
    assert enumerate_best(chain, [1], 5) == ([1, 2, 0], 0.0)


def test_two_symbol_vocab_has_three_candidates():
    m = HashModel(11, 2)
    tokens, score = enumerate_best(m, [1], 3)
    cands = []
    for length in range(3):
        y = [1] * length + [0]
        s = sum(float(m.score_next([1], y[:t])[y[t]]) for t in range(len(y)))
        cands.append((-s, tuple(y)))
    best = min(cands)
    assert tokens == list(best[1]) and score == -best[0]


def test_lookahead_depth1_is_argmax():
    for seed in range(20):
        m = HashModel(seed, 7)
        logp = m.score_next([1], [2])
        assert enumerate_lookahead(m, [1], [2], 1, mask_eos=True) == 1 + int(np.argmax(logp[1:]))
        assert enumerate_lookahead(m, [1], [2], 1, mask_eos=False) == int(np.argmax(logp))


def test_garden_path_lookahead(garden_path):
    assert enumerate_lookahead(garden_path, [1], [], 1) == 1
    assert enumerate_lookahead(garden_path, [1], [], 2) == 2


def test_order_independent():
    # relabelling the vocab permutes enumeration order; the chosen path must follow
    text = """src_vocab: a
tgt_vocab: </s> {0} {1} {2}
order: 1
s_max: 1
ctx s=1 [] :: {0}=0.5 {1}=0.3 {2}=0.2
ctx s=1 [{0}] :: {2}=1.0
ctx s=1 [{1}] :: </s>=1.0
ctx s=1 [{2}] :: </s>=1.0
"""
    for perm in itertools.permutations(["A", "B", "C"]):
        m = parse_tabular_model(text.format(*perm))
        tokens, score = enumerate_best(m, [1], 3)
        # {0}{2} then eos (0.5 * 1 * 1) beats {1} eos (0.3)
        assert m.tgt_vocab.decode(tokens) == [perm[0], perm[2], "</s>"]
        assert score == pytest.approx(math.log(0.5))


def test_guard():
    with pytest.raises(InstanceTooLargeError):
        enumerate_best(HashModel(1, 101), [1], 4)
    with pytest.raises(InstanceTooLargeError):
        enumerate_lookahead(HashModel(1, 1001), [1], [], 3)
