"""Prime-field arithmetic underlying every table cell and challenge.

The field is F_p with p = 2^64 - 2^32 + 1, the 64-bit-friendly prime
also known as the Goldilocks prime.  Elements are plain Python ints
kept in canonical form [0, p) at all times; the helpers below are the
only arithmetic the rest of the package uses, so canonicality never
needs re-checking downstream.  Identifier widths are bounded well
below 2^32, which keeps sums and products of ids far from the modulus
(see the canonicalization operator, which relies on that headroom).
"""

from __future__ import annotations

from .errors import InversionOfZero, WrongLength

# p = 2^64 - 2^32 + 1
MODULUS = 18446744069414584321

_BYTE_LEN = 8


def fe(value: int) -> int:
    """Reduce an arbitrary int into canonical form."""
    return value % MODULUS


def fe_add(a: int, b: int) -> int:
    return (a + b) % MODULUS


def fe_sub(a: int, b: int) -> int:
    return (a - b) % MODULUS


def fe_mul(a: int, b: int) -> int:
    return (a * b) % MODULUS


def fe_neg(a: int) -> int:
    return (MODULUS - a) % MODULUS


def fe_inv(a: int) -> int:
    """Multiplicative inverse; raises InversionOfZero on a == 0."""
    if a % MODULUS == 0:
        raise InversionOfZero("0 has no multiplicative inverse")
    return pow(a, MODULUS - 2, MODULUS)


def fe_pow(a: int, e: int) -> int:
    return pow(a, e, MODULUS)


def fe_from_bytes_wide(data: bytes) -> int:
    """Reduce a 32-byte big-endian integer into the field.

    Used for Fiat-Shamir challenge extraction from 256-bit digests.
    """
    if len(data) != 32:
        raise WrongLength(f"expected 32 bytes, got {len(data)}")
    return int.from_bytes(data, "big") % MODULUS


def fe_to_bytes(a: int) -> bytes:
    """Canonical 8-byte little-endian encoding of a field element."""
    return a.to_bytes(_BYTE_LEN, "little")


def fe_from_bytes(data: bytes) -> int:
    if len(data) != _BYTE_LEN:
        raise WrongLength(f"expected {_BYTE_LEN} bytes, got {len(data)}")
    value = int.from_bytes(data, "little")
    if value >= MODULUS:
        raise WrongLength(f"non-canonical cell value {value}")
    return value


def cells_to_bytes(values: list[int]) -> bytes:
    """Concatenated 8-byte LE encoding of a whole column."""
    return b"".join(v.to_bytes(_BYTE_LEN, "little") for v in values)
