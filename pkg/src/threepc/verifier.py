"""Client-side result checking: target lookup, proof-of-work statistics,
and spot-check re-hashing.

Recorded digests are never trusted: a positive target verdict requires a
fresh hash of the recorded password to reproduce the target, and spot
checks re-hash a random sample and re-evaluate the predicate.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import hashers, potfile
from .predicate import Digest, PredicateVector, eval_predicate

DEFAULT_Z_THRESHOLD = 5.0
DEFAULT_SPOT_SAMPLE = 1000


@dataclass(frozen=True)
class TargetLookup:
    cracked: bool
    cleartexts: tuple[bytes, ...] = ()   # all passwords that re-hash to target
    forged_lines: tuple[int, ...] = ()   # target-digest lines failing re-hash

    @property
    def cleartext(self) -> bytes | None:
        return self.cleartexts[0] if self.cleartexts else None


@dataclass(frozen=True)
class PowResult:
    passed: bool
    z_score: float


@dataclass(frozen=True)
class SpotCheckResult:
    passed: bool
    sampled: int
    bad_lines: tuple[int, ...] = ()


@dataclass
class VerificationVerdict:
    cracked: bool
    cleartext: bytes | None
    hit_count: int
    expected_r: float
    z_score: float
    pow_pass: bool
    spotcheck_pass: bool
    sampled: int
    forged_lines: tuple[int, ...] = field(default=())

    @property
    def honest(self) -> bool:
        return self.pow_pass and self.spotcheck_pass and not self.forged_lines


def chk_cs(potfile_path: str | Path, target: Digest, algo_id: str
           ) -> TargetLookup:
    """Scan the candidate set for the target digest.

    Every recorded match is re-hashed; forged lines (right digest, wrong
    password) are flagged, and hash collisions on the target are all
    reported rather than hidden.
    """
    width = hashers.descriptor(algo_id).digest_nibbles
    target_hex = target.hex
    cleartexts: list[bytes] = []
    forged: list[int] = []
    for line_no, digest_hex, password in potfile.iter_potfile(potfile_path,
                                                              width):
        if digest_hex != target_hex:
            continue
        try:
            fresh = hashers.digest(algo_id, password)
        except hashers.CandidateEncodingError:
            forged.append(line_no)
            continue
        if fresh.hex == target_hex:
            cleartexts.append(password)
        else:
            forged.append(line_no)
    return TargetLookup(bool(cleartexts), tuple(cleartexts), tuple(forged))


def proof_of_work(hit_count: int, expected_r: float,
                  z_threshold: float = DEFAULT_Z_THRESHOLD) -> PowResult:
    """Poisson-approximation deviation test on the returned hit count.

    Passes iff |hit_count - expected_r| <= z_threshold * sqrt(expected_r).
    """
    if expected_r <= 0:
        raise ValueError("expected_r must be positive")
    z = (hit_count - expected_r) / math.sqrt(expected_r)
    return PowResult(abs(z) <= z_threshold, z)


def spot_check(potfile_path: str | Path, v: PredicateVector, algo_id: str,
               sample_size: int = DEFAULT_SPOT_SAMPLE,
               rng: random.Random | int | None = None) -> SpotCheckResult:
    """Re-hash a uniform sample of candidate-set lines; every sampled pair
    must reproduce its digest and satisfy the predicate."""
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    width = hashers.descriptor(algo_id).digest_nibbles
    records = potfile.read_potfile(potfile_path, width)
    if not records:
        return SpotCheckResult(True, 0)
    k = min(sample_size, len(records))
    sample = rng.sample(records, k)
    bad: list[int] = []
    for line_no, digest_hex, password in sample:
        try:
            fresh = hashers.digest(algo_id, password)
        except hashers.CandidateEncodingError:
            bad.append(line_no)
            continue
        if fresh.hex != digest_hex or not eval_predicate(v, fresh):
            bad.append(line_no)
    bad.sort()
    return SpotCheckResult(not bad, k, tuple(bad))


def verify(potfile_path: str | Path, target: Digest, v: PredicateVector,
           algo_id: str, expected_r: float,
           z_threshold: float = DEFAULT_Z_THRESHOLD,
           spot_sample: int = DEFAULT_SPOT_SAMPLE,
           rng: random.Random | int | None = None) -> VerificationVerdict:
    """Full CHK-CS: target lookup, proof of work, spot check."""
    width = hashers.descriptor(algo_id).digest_nibbles
    hit_count = potfile.count_records(potfile_path, width)
    lookup = chk_cs(potfile_path, target, algo_id)
    pow_result = proof_of_work(hit_count, expected_r, z_threshold)
    spot = spot_check(potfile_path, v, algo_id, spot_sample, rng)
    return VerificationVerdict(
        cracked=lookup.cracked,
        cleartext=lookup.cleartext,
        hit_count=hit_count,
        expected_r=expected_r,
        z_score=pow_result.z_score,
        pow_pass=pow_result.passed,
        spotcheck_pass=spot.passed,
        sampled=spot.sampled,
        forged_lines=lookup.forged_lines,
    )


def render_verdict(verdict: VerificationVerdict) -> str:
    lines = [
        f"cracked = {'yes' if verdict.cracked else 'no'}",
    ]
    if verdict.cracked and verdict.cleartext is not None:
        lines.append(
            "cleartext = " + verdict.cleartext.decode("utf-8", "backslashreplace")
        )
    lines += [
        f"hit_count = {verdict.hit_count}",
        f"expected_r = {verdict.expected_r:.4f}",
        f"z_score = {verdict.z_score:.4f}",
        f"proof_of_work = {'pass' if verdict.pow_pass else 'FAIL'}",
        f"spot_check = {'pass' if verdict.spotcheck_pass else 'FAIL'} "
        f"({verdict.sampled} sampled)",
    ]
    if verdict.forged_lines:
        lines.append(f"forged_lines = {list(verdict.forged_lines)}")
    return "\n".join(lines) + "\n"
