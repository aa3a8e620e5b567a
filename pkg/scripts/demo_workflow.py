#!/usr/bin/env python3
"""End-to-end demo on a synthetic corpus: plan, crack offline, verify.

Builds a 200k-password corpus that contains one known secret, hides the
secret's CRC-32 digest in a decoy set sized for roughly 40 candidate
hits, cracks the whole corpus, and verifies the returned candidate set.
"""

import random
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, "src")

from threepc.cli import client_main
from threepc.hashers import digest

SECRET = b"hunter2-but-longer"


def main() -> int:
    work = Path(tempfile.mkdtemp(prefix="threepc-demo-"))
    rng = random.Random(42)
    words = [rng.randbytes(10).hex().encode() for _ in range(200_000)]
    words[123_456] = SECRET
    corpus = work / "corpus.txt"
    corpus.write_bytes(b"\n".join(words))

    target = digest("crc32", SECRET).hex
    print(f"workdir {work}")
    print(f"target digest (never sent to the server): {target}\n")

    steps = (
        ["plan", "--algo", "crc32", "--target", target,
         "--keyspace", "wordlist:corpus", "--corpus-file", str(corpus),
         "--r", "40", "--seed", "7", "--plan-store", str(work / "plans")],
        ["run", "--plan", str(work / "plans" / f"{target}.plan"),
         "--out", str(work / "demo.pot"), "--offline",
         "--corpus-file", str(corpus)],
        ["verify", "--plan", str(work / "plans" / f"{target}.plan"),
         "--potfile", str(work / "demo.pot")],
    )
    for argv in steps:
        print(f"$ threepc-client {' '.join(argv)}")
        code = client_main(argv)
        print(f"(exit {code})\n")
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
