"""Server-side cracking loop: hash the keyspace, filter through the
predicate, stream the survivors to a sink.

The predicate is compiled to per-byte lookup tables evaluated in order of
restrictiveness, so the per-hash cost is a hash call plus (on average)
about one table probe regardless of decoy-set size.
"""

from __future__ import annotations

import multiprocessing
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from . import hashers, keyspace
from .hashers import CandidateEncodingError
from .predicate import PredicateVector

FLUSH_BATCH = 4096
PROGRESS_EVERY = 10_000_000
CHUNKS_PER_WORKER = 16


class Sink(Protocol):
    def write_batch(self, pairs: list[tuple[bytes, bytes]]) -> None: ...


@dataclass
class CrackReport:
    hashed_count: int
    hit_count: int
    elapsed: float
    rate: float
    skipped_count: int = 0
    partial: bool = False


class EngineAbortError(RuntimeError):
    """Cracking aborted; carries the partial (still sound) report."""

    def __init__(self, message: str, report: CrackReport):
        super().__init__(message)
        self.report = report


def compile_checker(v: PredicateVector) -> Callable[[bytes], bool]:
    """Byte-table membership test over raw digests, equivalent to
    eval_predicate on the nibble form.

    Fully-free bytes are skipped and pinned bytes are probed most
    restrictive first, which keeps the average cost near one probe and
    independent of cardinality.
    """
    if len(v) % 2 != 0:
        raise ValueError("vector length must cover whole digest bytes")
    n_bytes = len(v) // 2
    tables: list[tuple[int, int, bytes]] = []  # (popcount, index, table)
    for k in range(n_bytes):
        hi_lo, hi_hi = v.bounds[2 * k]
        lo_lo, lo_hi = v.bounds[2 * k + 1]
        tbl = bytearray(256)
        count = 0
        for b in range(256):
            if hi_lo <= (b >> 4) <= hi_hi and lo_lo <= (b & 0xF) <= lo_hi:
                tbl[b] = 1
                count += 1
        if count < 256:
            tables.append((count, k, bytes(tbl)))
    tables.sort()
    checks = tuple((k, tbl) for _, k, tbl in tables)

    if not checks:
        return lambda digest: True

    k0, t0 = checks[0]
    rest = checks[1:]

    if not rest:
        return lambda digest: t0[digest[k0]] == 1

    def check(digest: bytes) -> bool:
        if not t0[digest[k0]]:
            return False
        for k, tbl in rest:
            if not tbl[digest[k]]:
                return False
        return True

    return check


def _scan_range(v: PredicateVector, spec: keyspace.KeyspaceSpec,
                algo_id: str, start: int, stop: int
                ) -> tuple[int, int, list[tuple[bytes, bytes]]]:
    """Hash candidates [start, stop); return (hashed, skipped, hits)."""
    hashfn = hashers.raw_fn(algo_id)
    check = compile_checker(v)
    hits: list[tuple[bytes, bytes]] = []
    append = hits.append
    hashed = skipped = 0
    for prefix, suffixes, lo, hi in keyspace.iter_blocks(spec, start, stop):
        chunk = suffixes if (not lo and hi == len(suffixes)) else suffixes[lo:hi]
        if prefix:
            chunk = [prefix + s for s in chunk]
        hashed += len(chunk)
        kept_before = len(hits)
        try:
            for pw in chunk:
                d = hashfn(pw)
                if check(d):
                    append((pw, d))
        except CandidateEncodingError:
            # slow path: redo the block isolating per-candidate failures
            del hits[kept_before:]
            for pw in chunk:
                try:
                    d = hashfn(pw)
                except CandidateEncodingError:
                    skipped += 1
                    continue
                if check(d):
                    append((pw, d))
    return hashed, skipped, hits


_FORK_CTX: tuple | None = None


def _chunk_worker(rng: tuple[int, int]):
    v, spec, algo_id = _FORK_CTX  # inherited through fork
    return _scan_range(v, spec, algo_id, rng[0], rng[1])


def crack(v: PredicateVector, spec: keyspace.KeyspaceSpec, algo_id: str,
          sink: Sink,
          progress: Callable[[int, float, float], None] | None = None
          ) -> CrackReport:
    """Hash every candidate exactly once; sink receives exactly the pairs
    whose digest satisfies the predicate."""
    return crack_parallel(v, spec, algo_id, sink, n_workers=1,
                          progress=progress)


def crack_parallel(v: PredicateVector, spec: keyspace.KeyspaceSpec,
                   algo_id: str, sink: Sink, n_workers: int = 1,
                   progress: Callable[[int, float, float], None] | None = None
                   ) -> CrackReport:
    """Same pair multiset as crack(); pair order is unspecified.

    progress, when given, is called at most every 10^7 hashes with
    (hashed so far, hashes/second, estimated seconds remaining).
    """
    if n_workers < 1:
        raise ValueError("n_workers must be >= 1")
    desc = hashers.descriptor(algo_id)
    if len(v) != desc.digest_nibbles:
        raise ValueError(
            f"vector length {len(v)} != {algo_id} digest length "
            f"{desc.digest_nibbles}"
        )
    chunks = [
        (a, b) for a, b in keyspace.partition(spec, n_workers * CHUNKS_PER_WORKER)
        if a != b
    ]
    total = sum(b - a for a, b in chunks)
    start_time = time.perf_counter()
    hashed = skipped = hits = 0
    last_progress = 0

    def consume(result: tuple[int, int, list[tuple[bytes, bytes]]]) -> None:
        nonlocal hashed, skipped, hits, last_progress
        chunk_hashed, chunk_skipped, pairs = result
        hashed += chunk_hashed
        skipped += chunk_skipped
        for i in range(0, len(pairs), FLUSH_BATCH):
            batch = pairs[i:i + FLUSH_BATCH]
            sink.write_batch(batch)
            hits += len(batch)
        if progress and hashed - last_progress >= PROGRESS_EVERY:
            last_progress = hashed
            elapsed = time.perf_counter() - start_time
            rate = hashed / max(elapsed, 1e-9)
            progress(hashed, rate, (total - hashed) / rate)

    def report(partial: bool = False) -> CrackReport:
        elapsed = time.perf_counter() - start_time
        return CrackReport(hashed, hits, elapsed,
                           hashed / max(elapsed, 1e-9), skipped, partial)

    global _FORK_CTX
    try:
        if n_workers == 1 or len(chunks) <= 1:
            for a, b in chunks:
                consume(_scan_range(v, spec, algo_id, a, b))
        else:
            _FORK_CTX = (v, spec, algo_id)
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(n_workers) as pool:
                for result in pool.imap_unordered(_chunk_worker, chunks):
                    consume(result)
    except (Exception, KeyboardInterrupt) as exc:
        raise EngineAbortError(f"cracking aborted: {exc}", report(partial=True)
                               ) from exc
    finally:
        _FORK_CTX = None
    return report()


class ListSink:
    """Collects pairs in memory (tests, small runs)."""

    def __init__(self):
        self.pairs: list[tuple[bytes, bytes]] = []

    def write_batch(self, pairs: list[tuple[bytes, bytes]]) -> None:
        self.pairs.extend(pairs)
