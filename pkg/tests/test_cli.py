import os
import re
import signal
import subprocess
import sys
import time

import pytest

from threepc import hashers
from threepc.cli import (
    EXIT_CONNECTION,
    EXIT_FOUL_PLAY,
    EXIT_NO_SMOOTH,
    EXIT_NOT_CRACKED,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_PLAN_EXISTS,
    client_main,
)
from threepc.planner import Plan
from threepc.potfile import read_potfile

import fixtures


def make_plan(tmp_path, capsys, target_pw=b"w0042", r=30.0, seed=7,
              descriptor=None, corpus_words=2000):
    corpus = tmp_path / "corpus.txt"
    corpus.write_bytes(b"\n".join(b"w%04d" % i for i in range(corpus_words)))
    target = hashers.digest("crc32", target_pw).hex
    code = client_main([
        "plan", "--algo", "crc32", "--target", target,
        "--keyspace", descriptor or "wordlist:corpus",
        "--corpus-file", str(corpus), "--r", str(r), "--seed", str(seed),
        "--plan-store", str(tmp_path / "plans"),
    ])
    capsys.readouterr()
    assert code == EXIT_OK
    plan_path = tmp_path / "plans" / f"{target}.plan"
    assert plan_path.is_file()
    return plan_path, corpus, target


class TestPlanCommand:
    def test_plan_writes_expected_fields(self, tmp_path, capsys):
        plan_path, _, target = make_plan(tmp_path, capsys)
        plan = Plan.from_text(plan_path.read_text())
        assert plan.target_hex == target
        assert plan.keyspace_size == 2000
        assert plan.r == 30.0
        assert plan.nv_target == pytest.approx(30 * 16 ** 8 / 2000)
        # chosen cardinality within the default 5% tolerance
        assert abs(plan.cardinality / plan.nv_target - 1) < 0.0513
        assert plan.seed == 7

    def test_duplicate_target_refused(self, tmp_path, capsys):
        plan_path, corpus, target = make_plan(tmp_path, capsys)
        code = client_main([
            "plan", "--algo", "crc32", "--target", target,
            "--keyspace", "wordlist:corpus", "--corpus-file", str(corpus),
            "--r", "10", "--plan-store", str(tmp_path / "plans"),
        ])
        assert code == EXIT_PLAN_EXISTS

    def test_bad_target_is_parse_error(self, tmp_path):
        assert client_main([
            "plan", "--algo", "crc32", "--target", "zz",
            "--keyspace", "mask:?d", "--r", "1",
            "--plan-store", str(tmp_path / "p"),
        ]) == EXIT_PARSE

    def test_impossible_tolerance_reports_widen_error(self, tmp_path, capsys):
        target = hashers.digest("crc32", b"x").hex
        code = client_main([
            "plan", "--algo", "crc32", "--target", target,
            "--keyspace", "mask:?d?d?d", "--r", "7",
            "--tolerance", "1e-9", "--plan-store", str(tmp_path / "p"),
        ])
        assert code == EXIT_NO_SMOOTH
        assert "widen" in capsys.readouterr().err

    def test_seed_reproducibility(self, tmp_path, capsys):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        a, _, _ = make_plan(tmp_path / "a", capsys)
        b, _, _ = make_plan(tmp_path / "b", capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_genv_explicit_nv(self, tmp_path, capsys):
        target = hashers.digest("ntlm", b"secret").hex
        code = client_main([
            "genv", "--algo", "ntlm", "--target", target,
            "--nv", str(16.0 ** 26), "--seed", "3",
            "--plan-store", str(tmp_path / "p"),
        ])
        assert code == EXIT_OK
        plan = Plan.from_text((tmp_path / "p" / f"{target}.plan").read_text())
        assert plan.cardinality == 16 ** 26


class TestRunOffline:
    def test_offline_run_writes_potfile_and_report(self, tmp_path, capsys):
        plan_path, corpus, target = make_plan(tmp_path, capsys)
        out = tmp_path / "out.pot"
        code = client_main([
            "run", "--plan", str(plan_path), "--out", str(out), "--offline",
            "--corpus-file", str(corpus), "--workers", "2",
        ])
        assert code == EXIT_OK
        report = (tmp_path / "out.pot.report").read_text()
        assert "hashed_count = 2000" in report
        assert "partial = false" in report
        records = read_potfile(out, 8)
        assert any(pw == b"w0042" for _, _, pw in records)

    def test_offline_runs_are_byte_reproducible(self, tmp_path, capsys):
        plan_path, corpus, _ = make_plan(tmp_path, capsys)
        outs = []
        for name, workers in (("r1.pot", 1), ("r2.pot", 2)):
            out = tmp_path / name
            assert client_main([
                "run", "--plan", str(plan_path), "--out", str(out),
                "--offline", "--corpus-file", str(corpus),
                "--workers", str(workers),
            ]) == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_empty_keyspace_gives_empty_potfile(self, tmp_path, capsys):
        plan_path, corpus, _ = make_plan(tmp_path, capsys)
        corpus.write_bytes(b"")
        out = tmp_path / "empty.pot"
        code = client_main([
            "run", "--plan", str(plan_path), "--out", str(out), "--offline",
            "--corpus-file", str(corpus),
        ])
        assert code == EXIT_OK
        assert out.read_bytes() == b""
        assert "hit_count = 0" in (tmp_path / "empty.pot.report").read_text()

    def test_missing_transport_flags(self, tmp_path, capsys):
        plan_path, _, _ = make_plan(tmp_path, capsys)
        assert client_main([
            "run", "--plan", str(plan_path), "--out", str(tmp_path / "x"),
        ]) == EXIT_PARSE

    def test_connection_refused(self, tmp_path, capsys):
        plan_path, _, _ = make_plan(tmp_path, capsys)
        assert client_main([
            "run", "--plan", str(plan_path), "--out", str(tmp_path / "x.pot"),
            "--server", "127.0.0.1:1",
        ]) == EXIT_CONNECTION


class TestVerifyCommand:
    def _run_offline(self, tmp_path, capsys, **kwargs):
        plan_path, corpus, target = make_plan(tmp_path, capsys, **kwargs)
        out = tmp_path / "out.pot"
        assert client_main([
            "run", "--plan", str(plan_path), "--out", str(out), "--offline",
            "--corpus-file", str(corpus),
        ]) == EXIT_OK
        return plan_path, out

    def test_cracked_honest_run_exits_zero(self, tmp_path, capsys):
        plan_path, out = self._run_offline(tmp_path, capsys)
        code = client_main(["verify", "--plan", str(plan_path),
                            "--potfile", str(out)])
        stdout = capsys.readouterr().out
        assert code == EXIT_OK
        assert "cracked = yes" in stdout
        assert "cleartext = w0042" in stdout
        assert re.search(r"z_score = -?\d+\.\d{4}", stdout)

    def test_uncracked_honest_run_exits_three(self, tmp_path, capsys):
        plan_path, out = self._run_offline(tmp_path, capsys,
                                           target_pw=b"not-in-corpus")
        assert client_main(["verify", "--plan", str(plan_path),
                            "--potfile", str(out)]) == EXIT_NOT_CRACKED

    def test_truncated_potfile_exits_four(self, tmp_path, capsys):
        plan_path, out = self._run_offline(tmp_path, capsys, r=400.0,
                                           corpus_words=60_000)
        records = out.read_bytes().splitlines(keepends=True)
        out.write_bytes(b"".join(records[:len(records) // 2]))
        assert client_main(["verify", "--plan", str(plan_path),
                            "--potfile", str(out)]) == EXIT_FOUL_PLAY

    def test_fabricated_pairs_exit_four(self, tmp_path, capsys):
        plan_path, out = self._run_offline(tmp_path, capsys, r=200.0,
                                           corpus_words=30_000)
        records = read_potfile(out, 8)
        forged = records[0][1].encode() + b":forged-password\n"
        out.write_bytes(out.read_bytes() + forged)
        assert client_main(["verify", "--plan", str(plan_path),
                            "--potfile", str(out),
                            "--spot-sample", "1000"]) == EXIT_FOUL_PLAY

    def test_garbage_potfile_exits_two(self, tmp_path, capsys):
        plan_path, out = self._run_offline(tmp_path, capsys)
        out.write_bytes(b"not a potfile\n")
        assert client_main(["verify", "--plan", str(plan_path),
                            "--potfile", str(out)]) == EXIT_PARSE


def test_server_bind_failure_exits_one(tmp_path):
    import socket

    from threepc.cli import EXIT_FAILURE, server_main

    with socket.socket() as holder:
        holder.bind(("127.0.0.1", 0))
        holder.listen(1)
        taken = holder.getsockname()[1]
        assert server_main(["--listen", f"127.0.0.1:{taken}"]) == EXIT_FAILURE


@pytest.mark.usefixtures("tmp_path")
class TestServerProcess:
    def _spawn_server(self, tmp_path, corpus_dir):
        proc = subprocess.Popen(
            [sys.executable, "-m", "threepc.cli", "server",
             "--listen", "127.0.0.1:0", "--corpus-dir", str(corpus_dir)],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
        )
        line = proc.stdout.readline()
        m = re.search(r"listening on ([\d.]+):(\d+)", line)
        assert m, line
        return proc, (m.group(1), int(m.group(2)))

    def test_networked_run_matches_offline(self, tmp_path, capsys):
        corpus_dir = tmp_path / "corpus"
        corpus_dir.mkdir()
        words = b"\n".join(b"w%04d" % i for i in range(2000))
        (corpus_dir / "corpus").write_bytes(words)
        corpus_file = tmp_path / "corpus.txt"
        corpus_file.write_bytes(words)

        plan_path, _, _ = make_plan(tmp_path, capsys)
        proc, (host, port) = self._spawn_server(tmp_path, corpus_dir)
        try:
            net_out = tmp_path / "net.pot"
            assert client_main([
                "run", "--plan", str(plan_path), "--out", str(net_out),
                "--server", f"{host}:{port}",
            ]) == EXIT_OK
            off_out = tmp_path / "off.pot"
            assert client_main([
                "run", "--plan", str(plan_path), "--out", str(off_out),
                "--offline", "--corpus-file", str(corpus_file),
            ]) == EXIT_OK
            net = sorted((d, pw) for _, d, pw in read_potfile(net_out, 8))
            off = sorted((d, pw) for _, d, pw in read_potfile(off_out, 8))
            assert net == off
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    def test_sigterm_mid_job_leaves_partial_potfile(self, tmp_path, capsys):
        corpus_dir = tmp_path / "corpus"
        corpus_dir.mkdir()
        # 10^7 candidates keep the single-worker server busy for seconds
        plan_path, _, target = make_plan(
            tmp_path, capsys, target_pw=b"0123456",
            descriptor="mask:?d?d?d?d?d?d?d")
        proc, (host, port) = self._spawn_server(tmp_path, corpus_dir)
        out = tmp_path / "partial.pot"
        try:
            import threading

            def kill_soon():
                time.sleep(1.0)
                proc.send_signal(signal.SIGTERM)

            killer = threading.Thread(target=kill_soon)
            killer.start()
            code = client_main([
                "run", "--plan", str(plan_path), "--out", str(out),
                "--server", f"{host}:{port}",
            ])
            killer.join()
            assert code == EXIT_CONNECTION
            report = (tmp_path / "partial.pot.report").read_text()
            assert "partial = true" in report
        finally:
            proc.terminate()
            proc.wait(timeout=10)
