"""Full-stack check: arssim driving a real uvicorn server over TCP."""

import socket
import threading
import time

import pytest
import uvicorn

from ars.auth import hash_password
from ars.config import ServiceConfig
from ars.sim import SimConfig, run_sim

PASSWORD = "lecture-hall"


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def server_url(tmp_path_factory):
    from ars.service import create_app
    config = ServiceConfig(
        teacher_password_hash=hash_password(PASSWORD),
        data_dir=str(tmp_path_factory.mktemp("data")),
        refresh_interval_ms=50,
    )
    port = free_port()
    app = create_app(config)
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                           log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_sim_over_http_matches_oracle(server_url):
    report = run_sim(SimConfig(
        participants=25, seed=21, target=server_url, password=PASSWORD,
        duration_s=2.0, resubmit_probability=0.2, late_fraction=0.1,
        threads=8,
    ))
    assert report.equal, report.mismatch
    assert report.accepted > 0
    assert report.rejected_late > 0
