import random

import pytest

from zkgraph.errors import InversionOfZero, WrongLength
from zkgraph.field import (
    MODULUS,
    fe_add,
    fe_from_bytes,
    fe_from_bytes_wide,
    fe_inv,
    fe_mul,
    fe_neg,
    fe_sub,
    fe_to_bytes,
)

P = MODULUS


def test_modulus_value():
    assert P == 2**64 - 2**32 + 1


def test_add_wraparound_and_identity():
    assert fe_add(P - 1, 1) == 0
    assert fe_add(0, 7) == 7
    # oracle: (2^63 + 2^63) % p computed with big-int arithmetic
    assert fe_add(2**63, 2**63) == (2**63 + 2**63) % P == 4294967295


def test_mul_identities():
    for x in (0, 1, 7, P - 1, 2**40):
        assert fe_mul(1, x) == x
    assert fe_mul(P - 1, P - 1) == 1
    # oracle: (2^32 * 2^32) % p
    assert fe_mul(2**32, 2**32) == (2**32 * 2**32) % P == 4294967295


def test_inverse():
    assert fe_inv(1) == 1
    # oracle: extended-Euclid inverse of 2 is (p+1)/2
    assert fe_inv(2) == pow(2, -1, P) == 9223372034707292161
    with pytest.raises(InversionOfZero):
        fe_inv(0)


def test_from_bytes_wide():
    assert fe_from_bytes_wide(b"\x00" * 32) == 0
    assert fe_from_bytes_wide(P.to_bytes(32, "big")) == 0
    assert fe_from_bytes_wide((P + 5).to_bytes(32, "big")) == 5
    with pytest.raises(WrongLength):
        fe_from_bytes_wide(b"\x00" * 31)


def test_from_bytes_wide_deterministic():
    data = bytes(range(32))
    assert fe_from_bytes_wide(data) == fe_from_bytes_wide(bytes(range(32)))
    assert fe_from_bytes_wide(data) == int.from_bytes(data, "big") % P


def test_algebraic_laws_random():
    rng = random.Random(0xF1E1D)
    for _ in range(100_000):
        a, b, c = (rng.randrange(P) for _ in range(3))
        assert fe_add(fe_add(a, b), c) == fe_add(a, fe_add(b, c))
        assert fe_mul(a, fe_add(b, c)) == fe_add(fe_mul(a, b), fe_mul(a, c))
        assert fe_mul(fe_mul(a, b), c) == fe_mul(a, fe_mul(b, c))


def test_inverse_random():
    rng = random.Random(0xB0B)
    for _ in range(10_000):
        a = rng.randrange(1, P)
        assert fe_mul(a, fe_inv(a)) == 1


def test_sub_neg():
    rng = random.Random(3)
    for _ in range(1000):
        a, b = rng.randrange(P), rng.randrange(P)
        assert fe_add(fe_sub(a, b), b) == a
        assert fe_add(a, fe_neg(a)) == 0


def test_cell_serialization_roundtrip():
    for v in (0, 1, P - 1, 4294967295):
        assert fe_from_bytes(fe_to_bytes(v)) == v
    assert fe_to_bytes(1) == b"\x01" + b"\x00" * 7  # little-endian
    with pytest.raises(WrongLength):
        fe_from_bytes(b"\x00" * 7)
    with pytest.raises(WrongLength):
        fe_from_bytes(P.to_bytes(8, "little"))  # non-canonical
