from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ibptc.codec import crc_encode, saturate
from ibptc.errors import ConfigError
from ibptc.interleave import IbpiSpec, build_ibpi
from ibptc.memman import BlockState
from ibptc.termination import (Kind, TtSpec, TtState, extended_et_scan, false_termination_audit,
                               should_terminate, tt_round)

rng = np.random.default_rng(0)
DATA = rng.integers(0, 2, 32, dtype=np.uint8)
VALID = crc_encode(DATA)  # 40 bits, CRC-valid
INVALID = VALID.copy()
INVALID[3] ^= 1


def run(spec, vectors, truth=None):
    state = TtState()
    for k, bits in enumerate(vectors, start=1):
        _, state = tt_round(spec, state, saturate(bits), truth=truth)
        if should_terminate(spec, state):
            return k
    return None


@pytest.mark.parametrize("text, family, m", [
    ("crc:3", "crc", 3), ("sign:5", "sign", 5), ("hybrid:2", "hybrid", 2), ("T3.2", "hybrid", 2),
    ("T1.1", "crc", 1), ("genie", "genie", 1),
])
def test_parse(text, family, m):
    spec = TtSpec.parse(text)
    assert (spec.family, spec.m) == (family, m)


def test_parse_fixed_and_str():
    spec = TtSpec.parse("fixed:30")
    assert spec.fixed == 30 and str(spec) == "fixed:30"
    assert str(TtSpec.parse("T2.3")) == "sign:3"


@pytest.mark.parametrize("bad", ["crc", "nope:2", "crc:x", "crc:0", "fixed:0"])
def test_bad_specs(bad):
    with pytest.raises(ConfigError):
        TtSpec.parse(bad)


def test_genie_passes_first_round():
    assert run(TtSpec.parse("genie"), [VALID], truth=VALID) == 1


def test_genie_needs_truth():
    with pytest.raises(ConfigError):
        tt_round(TtSpec.parse("genie"), TtState(), saturate(VALID))


def test_sign_three_identical_rounds():
    assert run(TtSpec.parse("sign:3"), [INVALID] * 3) == 3


def test_crc_single_round():
    assert run(TtSpec.parse("crc:1"), [VALID]) == 1
    assert run(TtSpec.parse("crc:1"), [INVALID]) is None


def test_hybrid_needs_valid_and_stable():
    spec = TtSpec.parse("hybrid:2")
    assert run(spec, [VALID, VALID]) == 2
    assert run(spec, [INVALID, INVALID, INVALID]) is None
    other = crc_encode(1 - DATA)
    # a change of decisions restarts the run
    assert run(spec, [VALID, other, other]) == 3


def test_streak_reset_on_failure():
    spec = TtSpec.parse("crc:2")
    assert run(spec, [VALID, INVALID, VALID, VALID]) == 4


def test_should_terminate_thresholds():
    spec = TtSpec.parse("crc:2")
    assert not should_terminate(spec, TtState(streak=1))
    assert should_terminate(spec, TtState(streak=2))
    fixed = TtSpec.parse("fixed:30")
    assert not should_terminate(fixed, TtState(rounds=29))
    assert should_terminate(fixed, TtState(rounds=30))


def test_crc_rounds_skip_post_orientation():
    for text in ("crc:1", "hybrid:1"):
        state = TtState(streak=0, rounds=4)
        ok, new = tt_round(TtSpec.parse(text), state, saturate(VALID), "post")
        assert not ok and new is state
    ok, new = tt_round(TtSpec.parse("sign:2"), TtState(), saturate(VALID), "post")
    assert new.rounds == 1


@given(st.lists(st.integers(0, 3), min_size=1, max_size=12), st.integers(1, 4),
       st.sampled_from(["crc", "sign", "hybrid"]))
def test_larger_m_never_stops_earlier(trace, m, family):
    pool = [VALID, INVALID, crc_encode(1 - DATA), VALID[::-1].copy()]
    vecs = [pool[k] for k in trace]
    a = run(TtSpec(family, m), vecs)
    b = run(TtSpec(family, m + 1), vecs)
    if a is None:
        assert b is None
    elif b is not None:
        assert b >= a


@given(st.lists(st.integers(0, 1), min_size=1, max_size=10))
def test_streak_bounded(trace):
    spec = TtSpec.parse("crc:2")
    state = TtState()
    for k in trace:
        _, state = tt_round(spec, state, saturate([VALID, INVALID][k]))
        assert 0 <= state.streak <= spec.m


# ------------------------------------------------------- extended ETs


def _states(B, kinds=None):
    out = {b: BlockState(b) for b in range(B)}
    for b, k in (kinds or {}).items():
        out[b].kind = k
    return out


def test_rule_a_retires_face_of_terminated_neighbours():
    m = build_ibpi(IbpiSpec(24, 1), 6)
    states = _states(6, {1: Kind.REGULAR, 2: Kind.REGULAR, 3: Kind.REGULAR})
    events = extended_et_scan(states, m, TtSpec())
    assert [(e.block, e.face, e.rule) for e in events] == [(2, "post", "a")]
    assert states[2].post_retired


def test_no_terminated_neighbour_no_event():
    m = build_ibpi(IbpiSpec(24, 1), 6)
    assert extended_et_scan(_states(6), m, TtSpec()) == []


def test_rule_b_on_filled_content():
    m = build_ibpi(IbpiSpec(40, 1), 3)
    states = _states(3)
    spec = TtSpec.parse("crc:1")
    # the block never passed in its own DR but its filled content is clean
    events = extended_et_scan(states, m, spec, filled={1: saturate(VALID)}, candidates=())
    assert [(e.block, e.rule) for e in events] == [(1, "b")]
    assert states[1].kind == Kind.EXTENDED
    assert np.array_equal(states[1].decisions, VALID)


def test_audit_classification():
    truth = [VALID, VALID, VALID, VALID]
    recs = [SimpleNamespace(kind="regular", decisions=VALID),
            SimpleNamespace(kind="extended", decisions=INVALID),
            SimpleNamespace(kind="forced", decisions=VALID),
            SimpleNamespace(kind="dmax", decisions=INVALID)]
    a = false_termination_audit(recs, truth)
    assert (a.correct, a.incorrect, a.forced) == (1, 1, 2)
    assert a.per_block == ["correct", "incorrect", "forced", "forced"]
