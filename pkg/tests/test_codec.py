import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibptc.codec import (LLR_MAX, OPEN, ZERO_TAIL, AppInput, CrcSpec, TrellisSpec, app_decode,
                         crc_check, crc_encode, crc_syndrome, hard_decide, maxstar, parse_bits,
                         rsc_encode, saturate)
from ibptc.errors import ConfigError, InputError

from oracles import (brute_force_posterior, crc_remainder_longdiv, poly_divisible,
                     shift_register_parity)

CRC8 = CrcSpec()
TRELLIS = TrellisSpec()
bits = st.lists(st.integers(0, 1), min_size=1, max_size=64)


# ---------------------------------------------------------------- CRC


def test_default_generator_is_crc8():
    assert CRC8.generator == (1, 1, 0, 0, 1, 1, 0, 1, 1)
    assert CRC8.k == 8
    assert CRC8.degrees == [8, 7, 4, 3, 1, 0]


def test_from_string_matches_tuple():
    assert CrcSpec.from_string("110011011") == CRC8


@pytest.mark.parametrize("gen", ["0101", "1", "1100"])
def test_bad_generators_rejected(gen):
    with pytest.raises(ConfigError):
        CrcSpec.from_string(gen)


def test_parse_bits_rejects_non_binary():
    with pytest.raises(ConfigError):
        parse_bits("1021")


def test_crc_short_block_rejected():
    with pytest.raises(ConfigError):
        crc_syndrome(np.ones(8, dtype=np.uint8))


@given(bits)
def test_crc_parity_matches_long_division(data):
    cw = crc_encode(np.array(data, dtype=np.uint8))
    assert cw[-8:].tolist() == crc_remainder_longdiv(data, CRC8.generator)
    assert crc_check(cw)


@given(bits, st.data())
def test_single_bit_errors_always_detected(data, draw):
    cw = crc_encode(np.array(data, dtype=np.uint8))
    j = draw.draw(st.integers(0, cw.size - 1))
    cw[j] ^= 1
    assert not crc_check(cw)


@given(bits, bits)
def test_crc_is_linear(a, b):
    n = min(len(a), len(b))
    x, y = np.array(a[:n], dtype=np.uint8), np.array(b[:n], dtype=np.uint8)
    assert np.array_equal(crc_encode(x) ^ crc_encode(y), crc_encode(x ^ y))


@given(st.lists(st.integers(0, 1), min_size=9, max_size=80))
def test_check_agrees_with_divisibility(block):
    assert crc_check(np.array(block, dtype=np.uint8)) == poly_divisible(block, CRC8.generator)


def test_zero_padded_codeword_still_valid():
    cw = crc_encode(np.random.default_rng(3).integers(0, 2, 40, dtype=np.uint8))
    assert crc_check(np.concatenate([cw, np.zeros(3, dtype=np.uint8)]))


def test_batch_check_matches_single():
    rng = np.random.default_rng(0)
    x = rng.integers(0, 2, (50, 30), dtype=np.uint8)
    x[:10] = crc_encode(x[:10, :22])
    batch = crc_check(x)
    assert batch.tolist() == [crc_check(r) for r in x]
    assert batch[:10].all()


# ------------------------------------------------------------- trellis


def test_impulse_response():
    # 1 + D + D^3 feedback, 1 + D^2 + D^3 feedforward, stepped by hand
    u = np.zeros(8, dtype=np.uint8)
    u[0] = 1
    par, _ = rsc_encode(u)
    assert par.tolist() == [1, 1, 0, 0, 1, 1, 1, 0]


@given(st.lists(st.integers(0, 1), min_size=1, max_size=100))
def test_encoder_matches_shift_register(u):
    par, _ = rsc_encode(np.array(u, dtype=np.uint8))
    assert par.tolist() == shift_register_parity(u, TRELLIS.feedback, TRELLIS.feedforward)


def test_trellis_tables_are_permutations():
    assert TRELLIS.n_states == 8
    for u in (0, 1):
        assert sorted(TRELLIS.next_state[:, u]) == list(range(8))


def test_mismatched_polynomials_rejected():
    with pytest.raises(ConfigError):
        TrellisSpec((1, 1, 0, 1), (1, 0, 1))


def test_encoder_is_systematic_recursive():
    # recursive: a single 1 never returns to the zero state by itself
    u = np.zeros(30, dtype=np.uint8)
    u[0] = 1
    _, state = rsc_encode(u)
    assert state != 0


# ----------------------------------------------------------------- APP


def test_maxstar_exact_and_maxlog():
    assert maxstar(1.0, 2.0) == pytest.approx(np.logaddexp(1.0, 2.0), abs=1e-12)
    assert maxstar(1.0, 2.0, exact=False) == 2.0


@pytest.mark.parametrize("termination", [OPEN, ZERO_TAIL])
def test_posterior_matches_enumeration(termination):
    rng = np.random.default_rng(11)
    for _ in range(20):
        L = int(rng.integers(4, 10))
        sys, par, apri = rng.normal(0, 2, (3, L))
        ext, post = app_decode(AppInput(sys, par, apri, TRELLIS, termination))
        n_tail = TRELLIS.memory if termination == ZERO_TAIL else 0
        ref = brute_force_posterior(sys, par, apri, TRELLIS.feedback, TRELLIS.feedforward, n_tail)
        if n_tail:
            # known-zero inputs have infinite true LLR; the decoder saturates
            assert np.all(ext[L - n_tail:] == LLR_MAX)
            assert not hard_decide(post[L - n_tail:]).any()
            ref, post = ref[:L - n_tail], post[:L - n_tail]
        assert np.max(np.abs(post - ref)) < 1e-9


def test_extrinsic_excludes_own_inputs():
    rng = np.random.default_rng(4)
    sys, par, apri = rng.normal(0, 1, (3, 12))
    ext, post = app_decode(AppInput(sys, par, apri))
    assert np.allclose(post, sys + apri + ext)


def test_noiseless_decode_recovers_bits():
    rng = np.random.default_rng(5)
    u = rng.integers(0, 2, 60, dtype=np.uint8)
    par, _ = rsc_encode(u)
    _, post = app_decode(AppInput(4.0 * (1 - 2.0 * u), 4.0 * (1 - 2.0 * par), np.zeros(60)))
    assert np.array_equal(hard_decide(post), u)


def test_maxlog_close_to_logmap_at_high_snr():
    rng = np.random.default_rng(6)
    u = rng.integers(0, 2, 50, dtype=np.uint8)
    par, _ = rsc_encode(u)
    sys = 6.0 * (1 - 2.0 * u) + rng.normal(0, 1, 50)
    p = 6.0 * (1 - 2.0 * par) + rng.normal(0, 1, 50)
    _, a = app_decode(AppInput(sys, p, np.zeros(50)))
    _, b = app_decode(AppInput(sys, p, np.zeros(50)), exact=False)
    assert np.array_equal(hard_decide(a), hard_decide(b))


def test_non_finite_input_rejected():
    x = np.zeros(5)
    x[2] = np.nan
    with pytest.raises(InputError):
        app_decode(AppInput(x, np.zeros(5), np.zeros(5)))


def test_length_mismatch_rejected():
    with pytest.raises(InputError):
        AppInput(np.zeros(5), np.zeros(4), np.zeros(5))


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=20))
def test_outputs_saturate(vals):
    x = np.array(vals)
    ext, post = app_decode(AppInput(x, x[::-1].copy(), np.zeros_like(x)))
    assert np.all(np.abs(ext) <= LLR_MAX) and np.all(np.abs(post) <= LLR_MAX)


def test_hard_decision_ties_and_saturation():
    assert hard_decide([1.0, -1.0, 0.0]).tolist() == [0, 1, 0]
    assert saturate([0, 1]).tolist() == [LLR_MAX, -LLR_MAX]
