import pytest
from hypothesis import given, strategies as st

from simul_decode import READ, WRITE, Schedule, ThresholdAdaptive, WaitK, chunk_lengths, wait_k_actions
from simul_decode.core import ParseError
from simul_decode.policy import PolicyState, actions_from_string, load_schedule, parse_schedule

R, W = READ, WRITE


@pytest.mark.parametrize("k, m, n, expected", [
    (1, 2, 2, "RWRW"),
    (3, 5, 5, "RRRWRWRWWW"),
    (9, 4, 3, "RRRRWWW"),
])
def test_wait_k_actions(k, m, n, expected):
    assert wait_k_actions(k, m, n) == actions_from_string(expected)


@given(k=st.integers(1, 12), m=st.integers(1, 30), n=st.integers(1, 30))
def test_wait_k_counts_and_g_law(k, m, n):
    acts = wait_k_actions(k, m, n)
    assert acts.count(R) == m and acts.count(W) == n
    reads = t = 0
    for a in acts:
        if a is R:
            reads += 1
        else:
            t += 1
            assert reads == min(t + k - 1, m)


def test_waitk_policy_matches_action_list():
    for k in range(1, 6):
        for m in range(1, 9):
            pol = WaitK(k)
            s = t = 0
            acts = []
            # drive the live policy as the decoder would, stopping writes at n = m
            while s < m or t < m:
                a = pol.next_action(PolicyState(s, t, source_exhausted=(s == m)))
                acts.append(a)
                if a is R:
                    s += 1
                else:
                    t += 1
            assert acts == wait_k_actions(k, m, m)


def test_policy_first_action_is_read():
    state = PolicyState(0, 0)
    assert WaitK(1).next_action(state) is R
    assert ThresholdAdaptive(model=None).next_action(state) is R
    assert WaitK(2).next_action(PolicyState(5, 1, source_exhausted=True)) is W


def test_threshold_policy(garden_path):
    st0 = PolicyState(1, 0, source_prefix=(1,), committed=())
    assert ThresholdAdaptive(garden_path, rho=-0.6).next_action(st0) is W  # ln 0.6 = -0.51
    assert ThresholdAdaptive(garden_path, rho=-0.4).next_action(st0) is R
    with pytest.raises(ValueError):
        ThresholdAdaptive(garden_path, rho=0.5)


def test_schedule_policy_and_pending_writes():
    pol = Schedule(actions_from_string("RRWWWRW"))
    assert pol.next_action(PolicyState(0, 0)) is R
    assert pol.next_action(PolicyState(2, 0)) is W
    assert pol.pending_writes(PolicyState(2, 0)) == 3
    assert pol.pending_writes(PolicyState(2, 2)) == 1
    assert pol.next_action(PolicyState(4, 3)) is R  # past the end: read


@pytest.mark.parametrize("text, expected", [
    ("RRWW", "RRWW"),
    ("R W\nR W", "RWRW"),
])
def test_parse_schedule(text, expected):
    assert parse_schedule(text) == actions_from_string(expected)


def test_parse_schedule_error_offset():
    with pytest.raises(ParseError) as err:
        parse_schedule("RXW")
    assert err.value.offset == 1


def test_load_schedule(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("RR W\nW\n")
    assert load_schedule(p) == actions_from_string("RRWW")


@pytest.mark.parametrize("acts, reads, writes", [
    (wait_k_actions(3, 5, 5), [3, 1, 1], [1, 1, 3]),
    ([R] * 4, [4], []),
    (actions_from_string("RWRW"), [1, 1], [1, 1]),
])
def test_chunk_lengths(acts, reads, writes):
    assert chunk_lengths(acts) == (reads, writes)
