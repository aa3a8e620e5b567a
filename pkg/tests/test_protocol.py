import random
import socket
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threepc import hashers, keyspace, planner, protocol
from threepc.engine import ListSink, crack
from threepc.potfile import read_potfile
from threepc.predicate import parse_vector, serialize_vector, zk_vector
from threepc.protocol import (
    CandidateChunk,
    ConnectionLostError,
    ErrorReply,
    HashInfoAck,
    HashInfoRequest,
    JobDone,
    JobSubmit,
    ProtocolViolation,
    ServerError,
    client_session,
    decode_payload,
    encode_message,
    parse_endpoint,
    recv_message,
    run_job,
    send_message,
)

import fixtures

texts = st.text(max_size=40)
blobs = st.binary(max_size=60)
u64 = st.integers(0, 2 ** 64 - 1)

messages = st.one_of(
    st.builds(HashInfoRequest, texts),
    st.builds(HashInfoAck, texts, u64, u64),
    st.builds(JobSubmit, texts, texts, texts, blobs),
    st.builds(CandidateChunk,
              st.lists(st.tuples(texts, blobs), max_size=8).map(tuple)),
    st.builds(JobDone, u64, u64, u64),
    st.builds(ErrorReply, texts, texts),
)


class TestFraming:
    @settings(max_examples=300)
    @given(messages)
    def test_encode_decode_round_trip(self, msg):
        frame = encode_message(msg)
        length, tag = struct.unpack(">IB", frame[:5])
        assert length == len(frame) - 5
        assert decode_payload(tag, frame[5:]) == msg

    def test_unknown_tag_rejected(self):
        with pytest.raises(ProtocolViolation) as err:
            decode_payload(0x7F, b"")
        assert err.value.code == "bad-message"

    @given(messages, st.integers(0, 20))
    def test_truncated_payload_rejected(self, msg, cut):
        frame = encode_message(msg)
        payload = frame[5:]
        if not payload:
            return
        cut = min(cut, len(payload) - 1)
        tag = frame[4]
        with pytest.raises(ProtocolViolation):
            decode_payload(tag, payload[:len(payload) - 1 - cut])

    def test_trailing_bytes_rejected(self):
        frame = encode_message(HashInfoRequest("crc32"))
        with pytest.raises(ProtocolViolation):
            decode_payload(frame[4], frame[5:] + b"\x00")

    def test_parse_endpoint(self):
        assert parse_endpoint("127.0.0.1:3727") == ("127.0.0.1", 3727)
        with pytest.raises(ValueError):
            parse_endpoint("nope")


def _make_plan(target_pw=b"37", descriptor="mask:?d?d", r=5.0, algo="crc32",
               size=100, seed=1):
    target = hashers.digest(algo, target_pw)
    return planner.build_plan(target, algo, descriptor, size, r, seed=seed)


class TestServer:
    def test_end_to_end_job_matches_offline_engine(self, local_server, tmp_path):
        plan = _make_plan(seed=3)
        pot = tmp_path / "net.pot"
        report = run_job(plan, local_server.address, pot)
        assert report.hashed_count == 100

        spec = keyspace.make_keyspace(plan.keyspace_descriptor)
        sink = ListSink()
        crack(parse_vector(plan.vector_hex), spec, plan.algo_id, sink)
        offline = sorted((d.hex(), pw) for pw, d in sink.pairs)
        networked = sorted((d, pw) for _, d, pw in read_potfile(pot, 8))
        assert networked == offline

    def test_identical_jobs_reproduce(self, local_server, tmp_path):
        plan = _make_plan(seed=4)
        pots = []
        for name in ("a.pot", "b.pot"):
            path = tmp_path / name
            run_job(plan, local_server.address, path)
            pots.append(sorted(read_potfile(path, 8)))
        assert pots[0] == pots[1]

    def test_inline_corpus_upload(self, local_server, tmp_path):
        words = b"alpha\nbravo\ncharlie\n"
        plan = _make_plan(target_pw=b"bravo7",
                          descriptor="hybrid:uploaded:?w?d", size=30, seed=5)
        pot = tmp_path / "hybrid.pot"
        report = run_job(plan, local_server.address, pot, inline_corpus=words)
        assert report.hashed_count == 30

    def test_unknown_corpus_name(self, local_server, tmp_path):
        plan = _make_plan(descriptor="wordlist:absent", size=10, seed=6)
        with pytest.raises(ServerError) as err:
            run_job(plan, local_server.address, tmp_path / "x.pot")
        assert err.value.code == "unknown-corpus"

    def test_vector_length_mismatch(self, local_server):
        with socket.create_connection(local_server.address) as sock:
            send_message(sock, HashInfoRequest("crc32"))
            assert isinstance(recv_message(sock), HashInfoAck)
            send_message(sock, JobSubmit("crc32", "0f" * 10, "mask:?d"))
            reply = recv_message(sock)
        assert isinstance(reply, ErrorReply)
        assert reply.code == "vector-length-mismatch"

    def test_unknown_algo(self, local_server):
        with socket.create_connection(local_server.address) as sock:
            send_message(sock, HashInfoRequest("md5"))
            reply = recv_message(sock)
        assert isinstance(reply, ErrorReply)
        assert reply.code == "unknown-algo"

    def test_protocol_order_enforced(self, local_server):
        job = JobSubmit("crc32", "0f" * 8, "mask:?d")
        # job before hash info
        with socket.create_connection(local_server.address) as sock:
            send_message(sock, job)
            reply = recv_message(sock)
        assert isinstance(reply, ErrorReply) and reply.code == "protocol-order"
        # duplicated hash info request
        with socket.create_connection(local_server.address) as sock:
            send_message(sock, HashInfoRequest("crc32"))
            recv_message(sock)
            send_message(sock, HashInfoRequest("crc32"))
            reply = recv_message(sock)
        assert isinstance(reply, ErrorReply) and reply.code == "protocol-order"

    def test_oversized_frame_rejected(self, corpus_dir):
        server = protocol.CrackServer("127.0.0.1", 0, corpus_dir,
                                      max_frame=1024)
        server.serve_in_background()
        try:
            with socket.create_connection(server.address) as sock:
                sock.sendall(struct.pack(">IB", 10_000_000, 0x01))
                reply = recv_message(sock)
            assert isinstance(reply, ErrorReply)
            assert reply.code == "frame-too-large"
        finally:
            server.shutdown()

    def test_bad_descriptor(self, local_server, tmp_path):
        plan = _make_plan(seed=8)
        plan.keyspace_descriptor = "mask:?x"
        with pytest.raises(ServerError) as err:
            run_job(plan, local_server.address, tmp_path / "y.pot")
        assert err.value.code == "bad-descriptor"

    def test_connection_refused_maps_to_connection_lost(self, tmp_path):
        plan = _make_plan(seed=9)
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            free_port = probe.getsockname()[1]
        with pytest.raises(ConnectionLostError):
            run_job(plan, ("127.0.0.1", free_port), tmp_path / "z.pot")


class TestClientSession:
    def test_full_session_cracks_planted_target(self, local_server,
                                                corpus_dir, tmp_path):
        words = [b"w%05d" % i for i in range(5000)]
        (corpus_dir / "demo").write_bytes(b"\n".join(words) + b"\n")
        result = client_session(
            hashers.digest("crc32", b"w01234").hex, "crc32", r=40.0,
            keyspace_descriptor="wordlist:demo",
            endpoint=local_server.address,
            potfile_path=tmp_path / "sess.pot",
            corpus=keyspace.DirectoryCorpus(corpus_dir), seed=11,
        )
        assert result.verdict.cracked
        assert result.verdict.cleartext == b"w01234"
        assert result.verdict.pow_pass and result.verdict.spotcheck_pass
        assert result.report.hashed_count == 5000

    def test_concurrent_sessions_stay_isolated(self, local_server, tmp_path):
        from concurrent.futures import ThreadPoolExecutor

        def session(tag: int):
            pw = b"t%d%d%d" % (tag, tag, tag)
            return tag, client_session(
                hashers.digest("crc32", pw).hex, "crc32", r=4.0,
                keyspace_descriptor="mask:t?d?d?d",
                endpoint=local_server.address,
                potfile_path=tmp_path / f"conc{tag}.pot", seed=tag,
            )

        with ThreadPoolExecutor(max_workers=2) as pool:
            results = dict(pool.map(session, (1, 2)))
        for tag, result in results.items():
            assert result.report.hashed_count == 1000
            assert result.verdict.cracked
            assert result.verdict.cleartext == b"t%d%d%d" % (tag, tag, tag)

    def test_wire_never_contains_target_digest(self, local_server, tmp_path):
        rng = random.Random(0xD1CE)
        for trial in range(5):
            pw = b"s%06d" % rng.randrange(10 ** 6)
            target_hex = hashers.digest("crc32", pw).hex
            tx = bytearray()
            client_session(
                target_hex, "crc32", r=3.0,
                keyspace_descriptor="mask:?d?d?d",
                endpoint=local_server.address,
                potfile_path=tmp_path / f"p{trial}.pot",
                seed=trial, tx_log=tx,
            )
            wire = bytes(tx)
            assert target_hex.encode() not in wire
            assert target_hex.upper().encode() not in wire
