"""Pluggable one-way hash backends producing digests from passwords."""

from __future__ import annotations

import hashlib
import time
import zlib
from dataclasses import dataclass
from typing import Callable

from ._md4 import md4
from .predicate import Digest


class UnknownAlgoError(KeyError):
    pass


class CandidateEncodingError(ValueError):
    """Candidate bytes cannot be encoded for this algorithm (e.g. NTLM
    requires valid UTF-8 input); callers skip and count such candidates."""


@dataclass(frozen=True)
class HashAlgoDescriptor:
    algo_id: str
    digest_nibbles: int
    reference_rate: float | None = None  # hashes/second, measured on demand


def _crc32_raw(password: bytes) -> bytes:
    return (zlib.crc32(password) & 0xFFFFFFFF).to_bytes(4, "big")


def _sha256_raw(password: bytes) -> bytes:
    return hashlib.sha256(password).digest()


def _ntlm_raw(password: bytes) -> bytes:
    # MD4 over the UTF-16LE form; input bytes must decode as UTF-8
    try:
        text = password.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CandidateEncodingError(f"not valid UTF-8: {password!r}") from exc
    return md4(text.encode("utf-16-le"))


_REGISTRY: dict[str, tuple[HashAlgoDescriptor, Callable[[bytes], bytes]]] = {}
_MEASURED_RATES: dict[str, float] = {}


def register_algo(algo_id: str, digest_nibbles: int,
                  raw_fn: Callable[[bytes], bytes]) -> None:
    _REGISTRY[algo_id] = (HashAlgoDescriptor(algo_id, digest_nibbles), raw_fn)


register_algo("crc32", 8, _crc32_raw)
register_algo("ntlm", 32, _ntlm_raw)
register_algo("sha256", 64, _sha256_raw)


def known_algos() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def descriptor(algo_id: str) -> HashAlgoDescriptor:
    try:
        desc, _ = _REGISTRY[algo_id]
    except KeyError:
        raise UnknownAlgoError(algo_id) from None
    rate = _MEASURED_RATES.get(algo_id)
    return HashAlgoDescriptor(desc.algo_id, desc.digest_nibbles, rate)


def raw_fn(algo_id: str) -> Callable[[bytes], bytes]:
    """The bytes -> raw-digest function; the engine's hot path."""
    try:
        return _REGISTRY[algo_id][1]
    except KeyError:
        raise UnknownAlgoError(algo_id) from None


def raw_digest(algo_id: str, password: bytes) -> bytes:
    return raw_fn(algo_id)(password)


def digest(algo_id: str, password: bytes) -> Digest:
    desc = descriptor(algo_id)
    d = Digest.from_bytes(raw_fn(algo_id)(password), algo_id)
    assert len(d) == desc.digest_nibbles
    return d


def parse_digest_hex(algo_id: str, text: str) -> Digest:
    """Parse a hex digest, enforcing the algorithm's nibble length."""
    desc = descriptor(algo_id)
    d = Digest.from_hex(text, algo_id)
    if len(d) != desc.digest_nibbles:
        raise ValueError(
            f"{algo_id} digests are {desc.digest_nibbles} hex chars, got {len(d)}"
        )
    return d


def measure_rate(algo_id: str, sample_budget: int = 100_000,
                 refresh: bool = False) -> float:
    """Wall-clock hashing throughput over synthetic inputs (hashes/second).

    Results are cached per algorithm; pass refresh=True to re-measure.
    """
    if sample_budget < 100_000:
        raise ValueError("sample_budget must be at least 10^5 hashes")
    if not refresh and algo_id in _MEASURED_RATES:
        return _MEASURED_RATES[algo_id]
    fn = raw_fn(algo_id)
    samples = [b"rate-sample-%012d" % i for i in range(10_000)]
    rounds = (sample_budget + len(samples) - 1) // len(samples)
    start = time.perf_counter()
    for _ in range(rounds):
        for pw in samples:
            fn(pw)
    elapsed = time.perf_counter() - start
    rate = (rounds * len(samples)) / max(elapsed, 1e-9)
    _MEASURED_RATES[algo_id] = rate
    return rate
