import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simul_decode import HashModel, hash_model_logits, available_backends
from simul_decode.core import InvalidTokenError, ParseError, ValidationError, VocabularyError
from simul_decode.scorer import LOG_FLOOR, bundled_model_path, parse_tabular_model

BACKENDS = available_backends()


def fnv1a64_reference(data: bytes) -> int:
    h = 14695981039346656037
    for byte in data:
        h = ((h ^ byte) * 1099511628211) % 2 ** 64
    return h


def hash_logits_reference(seed, src, tgt, V, alpha, eos_weight):
    w = []
    for v in range(V):
        key = f"{seed}|{','.join(map(str, src))}|{','.join(map(str, tgt))}|{v}".encode()
        u = (fnv1a64_reference(key) >> 11) / 2 ** 53
        w.append(u ** alpha * (eos_weight if v == 0 else 1.0))
    total = sum(w)
    return [math.log(x / total) for x in w]


# frozen from hash_logits_reference(42, [], [], 3, 1.0, 1.0)
GOLDEN_42 = [-1.0986124938450366, -1.0986131093760696, -1.098611262784107]


@pytest.mark.parametrize("backend", BACKENDS)
def test_golden_seed_42(backend):
    assert hash_logits_reference(42, [], [], 3, 1.0, 1.0) == GOLDEN_42
    got = hash_model_logits(42, [], [], 3, 1.0, 1.0, backend=backend)
    np.testing.assert_allclose(got, GOLDEN_42, rtol=0, atol=1e-12)


def test_known_fnv_vectors():
    # published FNV-1a 64 test vectors
    assert fnv1a64_reference(b"") == 0xCBF29CE484222325
    assert fnv1a64_reference(b"a") == 0xAF63DC4C8601EC8C
    from simul_decode import _hashkern_py
    assert _hashkern_py.fnv1a64(b"foobar") == 0x85944171F73967E8
    if "compiled" in BACKENDS:
        from simul_decode import _hashkern
        assert _hashkern.fnv1a64(b"foobar") == 0x85944171F73967E8


@pytest.mark.parametrize("backend", BACKENDS)
@given(seed=st.integers(0, 2 ** 63), src=st.lists(st.integers(0, 5000), max_size=6),
       tgt=st.lists(st.integers(0, 30), max_size=6), alpha=st.floats(0.1, 8.0),
       eos_weight=st.floats(0.0, 5.0))
@settings(max_examples=60)
def test_hash_matches_reference(backend, seed, src, tgt, alpha, eos_weight):
    V = 31
    got = hash_model_logits(seed, src, tgt, V, alpha, eos_weight, backend=backend)
    if eos_weight == 0.0:
        assert got[0] == LOG_FLOOR
        return
    want = hash_logits_reference(seed, src, tgt, V, alpha, eos_weight)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_normalization_1000_draws(backend):
    rng = random.Random(5)
    for _ in range(1000):
        V = rng.randrange(2, 60)
        m = HashModel(rng.randrange(2 ** 40), V, alpha=rng.uniform(0.2, 4), backend=backend)
        src = [rng.randrange(50) for _ in range(rng.randrange(5))]
        tgt = [rng.randrange(V) for _ in range(rng.randrange(5))]
        logp = m.score_next(src, tgt)
        assert logp.shape == (V,)
        assert abs(np.exp(logp).sum() - 1.0) <= 1e-9
        assert (logp <= 0).all()


@pytest.mark.parametrize("backend", BACKENDS)
def test_purity_and_batch_consistency(backend):
    m = HashModel(1, 50, alpha=1.7, eos_weight=0.5, backend=backend)
    a = m.score_next([3, 4], [5])
    b = m.score_next([3, 4], [5])
    assert a.tobytes() == b.tobytes()
    batch = m.score_batch([3, 4], [[5], [], [1, 2]])
    assert batch[0].tobytes() == a.tobytes()
    assert batch[1].tobytes() == m.score_next([3, 4], []).tobytes()


def test_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    rng = random.Random(0)
    for _ in range(50):
        seed, V = rng.randrange(10 ** 9), rng.randrange(2, 1200)
        alpha = rng.choice([1.0, rng.uniform(0.3, 5)])
        src = [rng.randrange(100) for _ in range(3)]
        tgt = [rng.randrange(V) for _ in range(2)]
        x = hash_model_logits(seed, src, tgt, V, alpha, 1.3, backend="compiled")
        y = hash_model_logits(seed, src, tgt, V, alpha, 1.3, backend="python")
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)


def test_hash_model_validation():
    with pytest.raises(ValidationError):
        HashModel(1, 1)
    with pytest.raises(ValidationError):
        HashModel(1, 4, alpha=0.0)
    m = HashModel(1, 4)
    with pytest.raises(InvalidTokenError):
        m.score_next([1], [4])
    with pytest.raises(InvalidTokenError):
        m.score_next([-1], [])


# --- tabular ------------------------------------------------------------------


def test_garden_path_table_read(garden_path):
    src = garden_path.src_vocab.encode(["世行"])
    logp = garden_path.score_next(src, [])
    np.testing.assert_allclose(logp[1:3], np.log([0.6, 0.4]), rtol=0, atol=1e-15)
    assert logp[0] == LOG_FLOOR
    assert len(garden_path.tgt_vocab) == 5


def test_unseen_context_is_uniform(garden_path):
    # nothing is stored for s=0
    logp = garden_path.score_next([], [3])
    np.testing.assert_allclose(logp, -math.log(5))


def test_backoff_to_shorter_suffix(garden_path):
    # suffix [C, D] is unknown, [D] is unknown, [] is known
    logp = garden_path.score_next([1], [3, 4])
    np.testing.assert_allclose(np.exp(logp[1:3]), [0.6, 0.4])


def test_s_max_caps_source_length(garden_path):
    a = garden_path.score_next([1], [2])
    b = garden_path.score_next([1, 2, 3, 4, 5], [2])
    assert a.tobytes() == b.tobytes()


def test_normalized_after_load():
    m = parse_tabular_model("""
src_vocab: a
tgt_vocab: </s> x y
order: 0
s_max: 0
ctx s=0 [] :: x=0.3333333 y=0.6666667
""")
    assert abs(np.exp(m.score_next([], [])).sum() - 1) <= 1e-9


HEADER = "src_vocab: a b\ntgt_vocab: </s> A B C D\norder: 1\ns_max: 2\n"


def test_load_five_token_model():
    m = parse_tabular_model(HEADER + "ctx s=1 [] :: A=1\n")
    assert m.vocab_size == 5


def test_load_bad_sum_names_context():
    with pytest.raises(ValidationError, match=r"ctx s=1 \[A\]"):
        parse_tabular_model(HEADER + "ctx s=1 [A] :: B=0.5 C=0.4\n")


def test_load_unknown_token():
    with pytest.raises(VocabularyError, match="Z"):
        parse_tabular_model(HEADER + "ctx s=1 [] :: A=0.5 Z=0.5\n")
    with pytest.raises(VocabularyError, match="Z"):
        parse_tabular_model(HEADER + "ctx s=1 [Z] :: A=1\n")


@pytest.mark.parametrize("body, line", [
    ("ctx s=1 [] A=1\n", 5),
    ("ctx s=x [] :: A=1\n", 5),
    ("ctx s=1 [] :: A=0.5 B\n", 5),
    ("\n\nctx s=1 [] :: A=abc\n", 7),
    ("bogus line\n", 5),
])
def test_load_syntax_errors_carry_line(body, line):
    with pytest.raises(ParseError) as err:
        parse_tabular_model(HEADER + body)
    assert err.value.line == line


def test_removing_entries_only_backs_off(garden_path):
    with open(bundled_model_path("garden_path"), encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    ctx_lines = [i for i, l in enumerate(lines) if l.startswith("ctx")]
    for drop in ctx_lines:
        m = parse_tabular_model("\n".join(l for i, l in enumerate(lines) if i != drop))
        for tgt in ([], [1], [2], [1, 3], [2, 4], [3, 3, 3]):
            logp = m.score_next([1], tgt)
            assert abs(np.exp(logp).sum() - 1) <= 1e-9
