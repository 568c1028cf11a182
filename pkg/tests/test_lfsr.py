"""LFSR generator: hand-iterated bit oracle, period walks, parameter table."""
import math

import numpy as np
import pytest

from ubmcqmc.lfsr import (
    LfsrParams,
    bit_period,
    format_params_line,
    is_primitive,
    lfsr_stream,
    lfsr_values_u32,
    load_params_file,
    params_for_order,
    parse_params_line,
    period_walk,
    shipped_params,
)

# n=3, p(x) = x^3 + x + 1, i.e. a = (a0, a1, a2) = (1, 1, 0)
P3 = LfsrParams(n=3, g=1, coeffs=(1, 1, 0))


def test_hand_iterated_bitstream():
    # b_i = b_{i-3} + b_{i-2} mod 2 from seed (1,0,0):
    # 1,0,0 -> 1 -> 0 -> 1 -> 1, then repeats with period 7
    np.testing.assert_array_equal(bit_period(P3, seed=(1, 0, 0)), [1, 0, 0, 1, 0, 1, 1])
    assert period_walk(P3, seed=(1, 0, 0)) == 7


def test_stream_values_match_binary_fraction_definition():
    bits = [1, 0, 0, 1, 0, 1, 1]
    v = lfsr_stream(P3, seed=(1, 0, 0), count=3)
    for i in range(3):
        want = sum(bits[(i * P3.g + j) % 7] * 2.0 ** -(j + 1) for j in range(32))
        assert v[i] == want


def test_offset_strides_the_bitstream():
    p = LfsrParams(n=3, g=2, coeffs=(1, 1, 0))
    bits = [1, 0, 0, 1, 0, 1, 1]
    v = lfsr_stream(p, seed=(1, 0, 0), count=7)
    for i in range(7):
        want = sum(bits[(i * 2 + j) % 7] * 2.0 ** -(j + 1) for j in range(32))
        assert v[i] == want


def test_v_sequence_period_wraps():
    vals = lfsr_values_u32(P3, count=15)
    np.testing.assert_array_equal(vals[7:14], vals[:7])


def test_state_tuples_visit_every_nonzero_pattern():
    p = params_for_order(5)
    bits = bit_period(p)
    period = p.period
    ext = np.concatenate([bits, bits[: p.n - 1]]).astype(np.int64)
    windows = np.zeros(period, dtype=np.int64)
    for j in range(p.n):
        windows |= ext[j : j + period] << j
    assert sorted(windows) == list(range(1, period + 1))


def test_all_zero_seed_rejected():
    with pytest.raises(ValueError):
        bit_period(P3, seed=(0, 0, 0))
    with pytest.raises(ValueError):
        period_walk(P3, seed=0)


def test_non_primitive_polynomial_rejected():
    # x^4 + x^3 + x^2 + x + 1 is irreducible but has order 5, not 15
    with pytest.raises(ValueError):
        LfsrParams(n=4, g=1, coeffs=(1, 1, 1, 1))
    # x^4 + x^2 + 1 = (x^2 + x + 1)^2 is reducible
    with pytest.raises(ValueError):
        LfsrParams(n=4, g=1, coeffs=(1, 0, 1, 0))


def test_offset_sharing_a_factor_with_period_rejected():
    with pytest.raises(ValueError):
        LfsrParams(n=4, g=3, coeffs=(1, 1, 0, 0))  # gcd(3, 15) = 3
    LfsrParams(n=4, g=2, coeffs=(1, 1, 0, 0))  # gcd(2, 15) = 1 is fine


def test_is_primitive_spot_checks():
    assert is_primitive(0b1011, 3)        # x^3 + x + 1
    assert not is_primitive(0b1111, 3)    # x^3 + x^2 + x + 1 reducible
    assert not is_primitive(0b11111, 4)   # order-5 irreducible
    assert is_primitive(0b10011, 4)       # x^4 + x + 1


def test_shipped_table_orders_and_validity():
    table = shipped_params()
    assert sorted(table) == list(range(5, 21))
    for n, p in table.items():
        assert p.n == n
        assert math.gcd(p.g, p.period) == 1
        assert is_primitive(p.poly_int, n)


@pytest.mark.parametrize("n", range(5, 17))
def test_shipped_params_attain_full_period(n):
    p = params_for_order(n)
    assert period_walk(p) == 2**n - 1


def test_params_for_missing_order_names_available():
    with pytest.raises(ValueError, match="available"):
        params_for_order(33)


def test_params_line_round_trip():
    p = params_for_order(10)
    assert parse_params_line(format_params_line(p)) == p
    # MSB-first text order: n g a_{n-1} ... a_0
    q = parse_params_line("3 1 0 1 1")
    assert q == P3


def test_params_file_comments_and_duplicates():
    text = "# comment line\n3 1 0 1 1\n\n4 1 0 0 1 1  # trailing\n"
    table = load_params_file(text)
    assert sorted(table) == [3, 4]
    with pytest.raises(ValueError, match="duplicate"):
        load_params_file("3 1 0 1 1\n3 2 0 1 1\n")


def test_stream_values_in_unit_interval():
    v = lfsr_stream(params_for_order(10), count=1023)
    assert v.min() >= 0.0 and v.max() < 1.0
    assert np.unique(v).size == 1023  # distinct states give distinct 32-bit prefixes
