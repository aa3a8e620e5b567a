"""Framed client/server job exchange over a TCP byte stream.

Frame layout: 4-byte big-endian payload length, 1-byte type tag, payload.
Payload fields: unsigned integers are 8-byte big-endian; strings and
byte blobs are length-prefixed (4-byte big-endian) raw bytes.  There is
no self-describing envelope, so frames are bit-exact testable.

Per connection the exchange is strictly ordered: hash-info request and
ack, one job submission, zero or more candidate chunks, one completion
record.  The target digest never appears in any client frame; the only
job-derived fields on the wire are the vector hex and the keyspace
descriptor.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

from . import engine, hashers, keyspace, planner, verifier
from .keyspace import DirectoryCorpus, UnresolvedCorpusError
from .planner import Plan
from .predicate import parse_vector, serialize_vector

DEFAULT_PORT = 3727
DEFAULT_MAX_FRAME = 64 * 1024 * 1024
INLINE_CORPUS_CAP = 256 * 1024 * 1024
CHUNK_PAIRS = 4096

TAG_HASH_INFO_REQUEST = 0x01
TAG_HASH_INFO_ACK = 0x02
TAG_JOB_SUBMIT = 0x03
TAG_CANDIDATE_CHUNK = 0x04
TAG_JOB_DONE = 0x05
TAG_ERROR_REPLY = 0x06

_HEADER = struct.Struct(">IB")
_U64 = struct.Struct(">Q")
_U32 = struct.Struct(">I")


class ProtocolViolation(RuntimeError):
    """Malformed or out-of-order traffic; code is the wire error code."""

    def __init__(self, code: str, text: str):
        super().__init__(f"{code}: {text}")
        self.code = code
        self.text = text


class ServerError(RuntimeError):
    """The server answered with an ErrorReply."""

    def __init__(self, code: str, text: str):
        super().__init__(f"server error {code}: {text}")
        self.code = code
        self.text = text


class ConnectionLostError(RuntimeError):
    """Stream ended mid-exchange; partial results are retained."""

    def __init__(self, message: str, partial: "SessionResult | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class HashInfoRequest:
    algo_id: str


@dataclass(frozen=True)
class HashInfoAck:
    algo_id: str
    digest_nibbles: int
    rate_hps: int


@dataclass(frozen=True)
class JobSubmit:
    algo_id: str
    vector_hex: str
    keyspace_descriptor: str
    corpus: bytes = b""  # optional inline wordlist; empty means absent


@dataclass(frozen=True)
class CandidateChunk:
    pairs: tuple[tuple[str, bytes], ...]  # (digest_hex, password)


@dataclass(frozen=True)
class JobDone:
    hashed_count: int
    hit_count: int
    elapsed_ms: int


@dataclass(frozen=True)
class ErrorReply:
    code: str
    text: str


Message = (HashInfoRequest | HashInfoAck | JobSubmit | CandidateChunk
           | JobDone | ErrorReply)


def _pack_bytes(data: bytes) -> bytes:
    return _U32.pack(len(data)) + data


def _pack_str(text: str) -> bytes:
    return _pack_bytes(text.encode("utf-8"))


class _PayloadReader:
    def __init__(self, payload: bytes):
        self._data = payload
        self._at = 0

    def u64(self) -> int:
        if self._at + 8 > len(self._data):
            raise ProtocolViolation("bad-message", "truncated integer field")
        value = _U64.unpack_from(self._data, self._at)[0]
        self._at += 8
        return value

    def blob(self) -> bytes:
        if self._at + 4 > len(self._data):
            raise ProtocolViolation("bad-message", "truncated length prefix")
        n = _U32.unpack_from(self._data, self._at)[0]
        self._at += 4
        if self._at + n > len(self._data):
            raise ProtocolViolation("bad-message", "truncated byte field")
        value = self._data[self._at:self._at + n]
        self._at += n
        return value

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolViolation("bad-message",
                                    "string field is not UTF-8") from None

    def done(self) -> None:
        if self._at != len(self._data):
            raise ProtocolViolation("bad-message",
                                    "trailing bytes in payload")


def encode_message(msg: Message) -> bytes:
    if isinstance(msg, HashInfoRequest):
        tag, payload = TAG_HASH_INFO_REQUEST, _pack_str(msg.algo_id)
    elif isinstance(msg, HashInfoAck):
        tag = TAG_HASH_INFO_ACK
        payload = (_pack_str(msg.algo_id) + _U64.pack(msg.digest_nibbles)
                   + _U64.pack(msg.rate_hps))
    elif isinstance(msg, JobSubmit):
        tag = TAG_JOB_SUBMIT
        payload = (_pack_str(msg.algo_id) + _pack_str(msg.vector_hex)
                   + _pack_str(msg.keyspace_descriptor)
                   + _pack_bytes(msg.corpus))
    elif isinstance(msg, CandidateChunk):
        tag = TAG_CANDIDATE_CHUNK
        parts = [_U64.pack(len(msg.pairs))]
        for digest_hex, password in msg.pairs:
            parts.append(_pack_str(digest_hex))
            parts.append(_pack_bytes(password))
        payload = b"".join(parts)
    elif isinstance(msg, JobDone):
        tag = TAG_JOB_DONE
        payload = (_U64.pack(msg.hashed_count) + _U64.pack(msg.hit_count)
                   + _U64.pack(msg.elapsed_ms))
    elif isinstance(msg, ErrorReply):
        tag = TAG_ERROR_REPLY
        payload = _pack_str(msg.code) + _pack_str(msg.text)
    else:
        raise TypeError(f"not a protocol message: {msg!r}")
    return _HEADER.pack(len(payload), tag) + payload


def decode_payload(tag: int, payload: bytes) -> Message:
    reader = _PayloadReader(payload)
    if tag == TAG_HASH_INFO_REQUEST:
        msg: Message = HashInfoRequest(reader.text())
    elif tag == TAG_HASH_INFO_ACK:
        msg = HashInfoAck(reader.text(), reader.u64(), reader.u64())
    elif tag == TAG_JOB_SUBMIT:
        msg = JobSubmit(reader.text(), reader.text(), reader.text(),
                        reader.blob())
    elif tag == TAG_CANDIDATE_CHUNK:
        count = reader.u64()
        pairs = tuple((reader.text(), reader.blob()) for _ in range(count))
        msg = CandidateChunk(pairs)
    elif tag == TAG_JOB_DONE:
        msg = JobDone(reader.u64(), reader.u64(), reader.u64())
    elif tag == TAG_ERROR_REPLY:
        msg = ErrorReply(reader.text(), reader.text())
    else:
        raise ProtocolViolation("bad-message", f"unknown type tag {tag}")
    reader.done()
    return msg


def _recvall(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except OSError as exc:
            raise ConnectionLostError(f"connection failed mid-frame: {exc}"
                                      ) from exc
        if not chunk:
            raise ConnectionLostError("connection closed mid-frame")
        buf += chunk
    return bytes(buf)


def send_message(sock: socket.socket, msg: Message,
                 tx_log: bytearray | None = None) -> None:
    frame = encode_message(msg)
    if tx_log is not None:
        tx_log += frame
    sock.sendall(frame)


def recv_message(sock: socket.socket,
                 max_frame: int = DEFAULT_MAX_FRAME) -> Message:
    header = _recvall(sock, _HEADER.size)
    length, tag = _HEADER.unpack(header)
    if length > max_frame:
        raise ProtocolViolation("frame-too-large",
                                f"{length} bytes exceeds {max_frame}")
    return decode_payload(tag, _recvall(sock, length))


# ---------------------------------------------------------------------------
# Server


class _ChunkSink:
    """Streams candidate pairs to the client as CandidateChunk frames."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self.hit_count = 0

    def write_batch(self, pairs: list[tuple[bytes, bytes]]) -> None:
        for i in range(0, len(pairs), CHUNK_PAIRS):
            batch = pairs[i:i + CHUNK_PAIRS]
            chunk = CandidateChunk(tuple(
                (digest.hex(), password) for password, digest in batch
            ))
            send_message(self._sock, chunk)
            self.hit_count += len(batch)


class _JobHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:  # one job per connection
        server: CrackServer = self.server.owner  # type: ignore[attr-defined]
        sock = self.request
        try:
            self._run_job(server, sock)
        except (ConnectionLostError, ConnectionError, BrokenPipeError):
            pass  # client went away; nothing to answer
        except ProtocolViolation as exc:
            self._reply_error(sock, exc.code, exc.text)
        except Exception as exc:  # pragma: no cover - defensive
            self._reply_error(sock, "internal-error", str(exc))

    def _reply_error(self, sock, code: str, text: str) -> None:
        try:
            send_message(sock, ErrorReply(code, text))
        except OSError:
            pass

    def _run_job(self, server: "CrackServer", sock: socket.socket) -> None:
        msg = recv_message(sock, server.max_frame)
        if not isinstance(msg, HashInfoRequest):
            raise ProtocolViolation("protocol-order",
                                    "expected hash-info request first")
        if msg.algo_id not in hashers.known_algos():
            raise ProtocolViolation("unknown-algo", msg.algo_id)
        desc = hashers.descriptor(msg.algo_id)
        rate = hashers.measure_rate(msg.algo_id, server.rate_budget)
        send_message(sock, HashInfoAck(msg.algo_id, desc.digest_nibbles,
                                       int(rate)))

        msg = recv_message(sock, server.max_frame)
        if not isinstance(msg, JobSubmit):
            raise ProtocolViolation("protocol-order",
                                    "expected job submission")
        job = msg
        if job.algo_id not in hashers.known_algos():
            raise ProtocolViolation("unknown-algo", job.algo_id)
        try:
            vector = parse_vector(job.vector_hex)
        except ValueError as exc:
            raise ProtocolViolation("bad-vector", str(exc)) from None
        nibbles = hashers.descriptor(job.algo_id).digest_nibbles
        if len(vector) != nibbles:
            raise ProtocolViolation(
                "vector-length-mismatch",
                f"vector covers {len(vector)} nibbles, {job.algo_id} "
                f"digests have {nibbles}",
            )
        if len(job.corpus) > INLINE_CORPUS_CAP:
            raise ProtocolViolation("corpus-too-large",
                                    f"inline corpus exceeds {INLINE_CORPUS_CAP}")
        try:
            spec = keyspace.parse_descriptor(job.keyspace_descriptor)
        except keyspace.KeyspaceError as exc:
            raise ProtocolViolation("bad-descriptor", str(exc)) from None
        if not spec.resolved:
            if job.corpus:
                words, _ = keyspace.ingest_wordlist(job.corpus)
                spec = keyspace.resolve(spec, words=words)
            else:
                try:
                    spec = keyspace.resolve(spec, server.corpus)
                except UnresolvedCorpusError as exc:
                    raise ProtocolViolation("unknown-corpus", str(exc)) from None

        sink = _ChunkSink(sock)
        start = time.perf_counter()
        report = engine.crack_parallel(vector, spec, job.algo_id, sink,
                                       n_workers=server.workers)
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        send_message(sock, JobDone(report.hashed_count, sink.hit_count,
                                   elapsed_ms))


class _TCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class CrackServer:
    """The daemon side: one crack job per connection, streamed results."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 corpus_dir: str | Path | None = None, workers: int = 1,
                 rate_budget: int = 100_000,
                 max_frame: int = DEFAULT_MAX_FRAME):
        self.corpus = DirectoryCorpus(corpus_dir) if corpus_dir else None
        self.workers = workers
        self.rate_budget = rate_budget
        self.max_frame = max_frame
        self._tcp = _TCPServer((host, port), _JobHandler)
        self._tcp.owner = self  # type: ignore[attr-defined]

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    def serve_forever(self) -> None:
        self._tcp.serve_forever()

    def serve_in_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread

    def shutdown(self) -> None:
        self._tcp.shutdown()
        self._tcp.server_close()

    def __enter__(self) -> "CrackServer":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def serve(listen: tuple[str, int], corpus_dir: str | Path | None,
          workers: int = 1, rate_budget: int = 100_000,
          max_frame: int = DEFAULT_MAX_FRAME) -> None:
    """Run the daemon until interrupted (CLI entry)."""
    server = CrackServer(listen[0], listen[1], corpus_dir, workers,
                         rate_budget, max_frame)
    server.serve_forever()


# ---------------------------------------------------------------------------
# Client


@dataclass
class SessionResult:
    plan: Plan
    report: engine.CrackReport
    verdict: verifier.VerificationVerdict | None
    potfile_path: Path


def parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {text!r}")
    return host, int(port)


def _connect(endpoint: tuple[str, int], timeout: float | None
             ) -> socket.socket:
    try:
        return socket.create_connection(endpoint, timeout=timeout)
    except OSError as exc:
        raise ConnectionLostError(f"cannot connect to {endpoint}: {exc}"
                                  ) from exc


def run_job(plan: Plan, endpoint: tuple[str, int], potfile_path: str | Path,
            inline_corpus: bytes = b"", tx_log: bytearray | None = None,
            timeout: float | None = None) -> engine.CrackReport:
    """Submit a planned job and stream the candidate set to a potfile.

    On connection loss the partial potfile is kept and the raised error
    carries a partial report.
    """
    if len(inline_corpus) > INLINE_CORPUS_CAP:
        raise ValueError("inline corpus exceeds the 256 MiB cap")
    potfile_path = Path(potfile_path)
    sock = _connect(endpoint, timeout)
    hit_count = 0
    try:
        with sock, open(potfile_path, "wb") as out:
            send_message(sock, HashInfoRequest(plan.algo_id), tx_log)
            ack = recv_message(sock)
            if isinstance(ack, ErrorReply):
                raise ServerError(ack.code, ack.text)
            if not isinstance(ack, HashInfoAck):
                raise ProtocolViolation("protocol-order",
                                        f"expected hash info ack, got {ack!r}")
            if ack.digest_nibbles * 2 != len(plan.vector_hex):
                raise ProtocolViolation(
                    "vector-length-mismatch",
                    "server digest length disagrees with the plan")
            send_message(sock, JobSubmit(plan.algo_id, plan.vector_hex,
                                         plan.keyspace_descriptor,
                                         inline_corpus), tx_log)
            while True:
                msg = recv_message(sock)
                if isinstance(msg, CandidateChunk):
                    lines = bytearray()
                    for digest_hex, password in msg.pairs:
                        lines += digest_hex.encode("ascii")
                        lines += b":"
                        lines += password
                        lines += b"\n"
                    out.write(lines)
                    hit_count += len(msg.pairs)
                elif isinstance(msg, JobDone):
                    elapsed = msg.elapsed_ms / 1000.0
                    return engine.CrackReport(
                        msg.hashed_count, msg.hit_count, elapsed,
                        msg.hashed_count / max(elapsed, 1e-9))
                elif isinstance(msg, ErrorReply):
                    raise ServerError(msg.code, msg.text)
                else:
                    raise ProtocolViolation(
                        "protocol-order", f"unexpected mid-job {msg!r}")
    except ConnectionLostError as exc:
        report = engine.CrackReport(0, hit_count, 0.0, 0.0, partial=True)
        raise ConnectionLostError(
            f"{exc}; partial candidate set retained at {potfile_path}",
            SessionResult(plan, report, None, potfile_path),
        ) from None


def client_session(target_hex: str, algo_id: str, r, keyspace_descriptor: str,
                   endpoint: tuple[str, int], potfile_path: str | Path,
                   corpus=None, inline_corpus: bytes = b"",
                   tolerance: float = planner.DEFAULT_TOLERANCE,
                   seed: int | None = None,
                   z_threshold: float = verifier.DEFAULT_Z_THRESHOLD,
                   spot_sample: int = verifier.DEFAULT_SPOT_SAMPLE,
                   tx_log: bytearray | None = None,
                   timeout: float | None = None) -> SessionResult:
    """The full exchange: hash info, local planning, job submission,
    candidate streaming, and local verification of the results."""
    target = hashers.parse_digest_hex(algo_id, target_hex)
    if inline_corpus:
        words, _ = keyspace.ingest_wordlist(inline_corpus)
        spec = keyspace.make_keyspace(keyspace_descriptor, words=words)
    else:
        spec = keyspace.make_keyspace(keyspace_descriptor, corpus)
    size = keyspace.spec_cardinality(spec)
    plan = planner.build_plan(target, algo_id, keyspace_descriptor, size, r,
                              tolerance, seed)
    report = run_job(plan, endpoint, potfile_path, inline_corpus, tx_log,
                     timeout)
    verdict = verifier.verify(
        potfile_path, target, parse_vector(plan.vector_hex), algo_id,
        plan.expected_candidates, z_threshold, spot_sample,
        rng=plan.seed ^ 0x5F0F,
    )
    return SessionResult(plan, report, verdict, Path(potfile_path))
