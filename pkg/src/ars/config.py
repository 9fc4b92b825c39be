"""Service configuration: a key = value file plus environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

ENV_KEYS = ("BIND_ADDR", "DATA_DIR", "TEACHER_PASSWORD_HASH",
            "REFRESH_INTERVAL_MS", "SESSION_TTL_MIN", "STATIC_DIR")


@dataclass
class ServiceConfig:
    bind_addr: str = "127.0.0.1:8000"
    data_dir: str = "./data"
    teacher_password_hash: str = ""
    refresh_interval_ms: int = 1000
    session_ttl_min: int = 240
    static_dir: str = ""
    submit_cap: int = 10_000  # fixed per-token cap

    @property
    def host(self) -> str:
        return self.bind_addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.bind_addr.rsplit(":", 1)[1])


def load_config(path: str | Path | None = None,
                env: dict[str, str] | None = None) -> ServiceConfig:
    values: dict[str, str] = {}
    if path is not None:
        for raw in Path(path).read_text().splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip().upper()] = value.strip()
    env = env if env is not None else dict(os.environ)
    for key in ENV_KEYS:
        if key in env:
            values[key] = env[key]
    cfg = ServiceConfig()
    if "BIND_ADDR" in values:
        cfg.bind_addr = values["BIND_ADDR"]
    if "DATA_DIR" in values:
        cfg.data_dir = values["DATA_DIR"]
    if "TEACHER_PASSWORD_HASH" in values:
        cfg.teacher_password_hash = values["TEACHER_PASSWORD_HASH"]
    if "REFRESH_INTERVAL_MS" in values:
        cfg.refresh_interval_ms = int(values["REFRESH_INTERVAL_MS"])
    if "SESSION_TTL_MIN" in values:
        cfg.session_ttl_min = int(values["SESSION_TTL_MIN"])
    if "STATIC_DIR" in values:
        cfg.static_dir = values["STATIC_DIR"]
    return cfg
