"""Digests, predicate vectors, and decoy-set arithmetic.

A digest is a fixed-length sequence of hex nibbles (most significant
first, matching the conventional hex rendering).  A predicate vector
assigns each nibble position an inclusive [lo, hi] range; the decoy set
is the box of all digests whose every nibble falls inside its range.
Membership costs at most two comparisons per position no matter how
large the box is, and the box size is the product of the range widths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

SMOOTH_PRIMES = (2, 3, 5, 7, 11, 13)


class LengthMismatchError(ValueError):
    """Vector and digest lengths disagree."""


class HitMaskUnsupportedError(ValueError):
    """Vector is not expressible at byte granularity."""


@dataclass(frozen=True)
class Digest:
    """Hash output as nibbles in [0, 15], most significant first."""

    nibbles: tuple[int, ...]
    algo_id: str = ""

    def __post_init__(self) -> None:
        if not self.nibbles:
            raise ValueError("digest must contain at least one nibble")
        if any(not 0 <= n <= 15 for n in self.nibbles):
            raise ValueError("digest nibbles must be in [0, 15]")

    def __len__(self) -> int:
        return len(self.nibbles)

    @classmethod
    def from_hex(cls, text: str, algo_id: str = "") -> "Digest":
        try:
            nibbles = tuple(int(c, 16) for c in text)
        except ValueError:
            raise ValueError(f"invalid hex digest: {text!r}") from None
        return cls(nibbles, algo_id)

    @classmethod
    def from_bytes(cls, raw: bytes, algo_id: str = "") -> "Digest":
        nibbles = []
        for b in raw:
            nibbles.append(b >> 4)
            nibbles.append(b & 0xF)
        return cls(tuple(nibbles), algo_id)

    @property
    def hex(self) -> str:
        return "".join("0123456789abcdef"[n] for n in self.nibbles)


@dataclass(frozen=True)
class PredicateVector:
    """Per-nibble [lo, hi] ranges; degenerate hi < lo is allowed (empty box)."""

    bounds: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.bounds:
            raise ValueError("vector must contain at least one bound pair")
        for lo, hi in self.bounds:
            if not (0 <= lo <= 15 and 0 <= hi <= 15):
                raise ValueError("vector components must be in [0, 15]")

    def __len__(self) -> int:
        return len(self.bounds)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(max(hi - lo + 1, 0) for lo, hi in self.bounds)


def eval_predicate(v: PredicateVector, x: Digest) -> bool:
    """Decoy-set membership: lo_i <= x_i <= hi_i for every position.

    At most 2*len(v) comparisons; cost never depends on cardinality(v).
    """
    if len(v) != len(x):
        raise LengthMismatchError(
            f"vector length {len(v)} != digest length {len(x)}"
        )
    for n, (lo, hi) in zip(x.nibbles, v.bounds):
        if n < lo or n > hi:
            return False
    return True


def cardinality(v: PredicateVector) -> int:
    """Exact size of the decoy set: product of max(hi - lo + 1, 0)."""
    card = 1
    for lo, hi in v.bounds:
        card *= max(hi - lo + 1, 0)
        if card == 0:
            return 0
    return card


def is_13_smooth(n: int) -> bool:
    """True iff n has no prime factor greater than 13 (n > 0)."""
    if n <= 0:
        return False
    for p in SMOOTH_PRIMES:
        while n % p == 0:
            n //= p
    return n == 1


def zk_vector(length: int) -> PredicateVector:
    """Full-range vector: the decoy set is the whole digest space."""
    if length <= 0:
        raise ValueError("length must be positive")
    return PredicateVector(((0, 15),) * length)


def singleton_vector(target: Digest) -> PredicateVector:
    """Vector whose decoy set is exactly {target}."""
    return PredicateVector(tuple((n, n) for n in target.nibbles))


def serialize_vector(v: PredicateVector) -> str:
    """2l lowercase hex chars: lo_i then hi_i per position, MSB first."""
    digits = "0123456789abcdef"
    return "".join(digits[lo] + digits[hi] for lo, hi in v.bounds)


def parse_vector(text: str) -> PredicateVector:
    """Inverse of serialize_vector; case-insensitive."""
    if len(text) % 2 != 0:
        raise ValueError("vector text must have an even number of hex chars")
    try:
        vals = [int(c, 16) for c in text]
    except ValueError:
        raise ValueError(f"invalid vector hex: {text!r}") from None
    bounds = tuple((vals[i], vals[i + 1]) for i in range(0, len(vals), 2))
    return PredicateVector(bounds)


def _mask_hex_width(length: int) -> int:
    # l/2 mask bits rendered as hex, 4 bits per char
    return (length // 2 + 3) // 4


def from_hit_mask(target: Digest, mask_hex: str) -> PredicateVector:
    """Byte-granular vector: mask bit n (from the right) pins digest byte n
    (from the right) to the target's value; unpinned bytes are full-range."""
    length = len(target)
    if length % 2 != 0:
        raise LengthMismatchError("digest length must be even for byte masks")
    n_bytes = length // 2
    if len(mask_hex) != _mask_hex_width(length):
        raise LengthMismatchError(
            f"mask must be {_mask_hex_width(length)} hex chars for l={length}"
        )
    mask = int(mask_hex, 16)
    if mask >> n_bytes:
        raise ValueError("mask has bits beyond the digest width")
    bounds = []
    for j in range(n_bytes):
        bit = (mask >> (n_bytes - 1 - j)) & 1
        hi_nib = target.nibbles[2 * j]
        lo_nib = target.nibbles[2 * j + 1]
        if bit:
            bounds.append((hi_nib, hi_nib))
            bounds.append((lo_nib, lo_nib))
        else:
            bounds.append((0, 15))
            bounds.append((0, 15))
    return PredicateVector(tuple(bounds))


def to_hit_mask(v: PredicateVector) -> tuple[str, str]:
    """Express v as (masked-digest-hex, mask-hex) if byte-granular.

    Every pair must be singleton or full-range and agree within each
    byte; free bytes render as 00 in the digest template.
    """
    length = len(v)
    if length % 2 != 0:
        raise HitMaskUnsupportedError("odd nibble count has no byte mask")
    digits = "0123456789abcdef"
    mask = 0
    out = []
    n_bytes = length // 2
    for j in range(n_bytes):
        pair = v.bounds[2 * j], v.bounds[2 * j + 1]
        kinds = [
            "single" if lo == hi else "full" if (lo, hi) == (0, 15) else "other"
            for lo, hi in pair
        ]
        if kinds == ["single", "single"]:
            mask |= 1 << (n_bytes - 1 - j)
            out.append(digits[pair[0][0]] + digits[pair[1][0]])
        elif kinds == ["full", "full"]:
            out.append("00")
        else:
            raise HitMaskUnsupportedError(
                f"byte {j + 1}: ranges {pair} are neither singleton nor full"
            )
    mask_hex = format(mask, f"0{_mask_hex_width(length)}x")
    return "".join(out), mask_hex


def enumerate_decoys(v: PredicateVector) -> Iterable[Digest]:
    """Yield every digest in the decoy set (use only for tiny vectors)."""

    def rec(i: int, acc: list[int]):
        if i == len(v):
            yield Digest(tuple(acc))
            return
        lo, hi = v.bounds[i]
        for n in range(lo, hi + 1):
            acc.append(n)
            yield from rec(i + 1, acc)
            acc.pop()

    if cardinality(v) == 0:
        return
    yield from rec(0, [])
