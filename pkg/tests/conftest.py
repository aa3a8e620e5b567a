import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def corpus_dir(tmp_path):
    root = tmp_path / "corpus"
    root.mkdir()
    return root


@pytest.fixture
def local_server(corpus_dir):
    """A threaded job server on an ephemeral loopback port."""
    from threepc.protocol import CrackServer

    server = CrackServer("127.0.0.1", 0, corpus_dir=corpus_dir, workers=1)
    server.serve_in_background()
    yield server
    server.shutdown()
