"""Small shared helpers: hashing, seed derivation, display rounding."""

import decimal

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def mix_seed(*parts) -> int:
    """Stable 64-bit sub-seed derived from an arbitrary tuple of labels/ints."""
    return fnv1a64("|".join(str(p) for p in parts).encode("utf-8"))


def round_half_up(x: float, ndigits: int = 2) -> float:
    """Decimal half-up rounding for display values.

    The value is first snapped to 10 decimal places so that binary noise
    (e.g. 7.324999999999999 standing in for 7.325) rounds the way the
    decimal arithmetic intends.
    """
    q = decimal.Decimal(1).scaleb(-ndigits)
    return float(decimal.Decimal(f"{x:.10f}").quantize(q, rounding=decimal.ROUND_HALF_UP))
