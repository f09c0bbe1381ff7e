"""Server configuration: JSON config file with environment overrides.

Environment variables (RINGVAULT_*) win over the file; the file wins over
defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional


@dataclass
class ServerConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8470
    data_dir: Path = Path("./ringvault-data")
    outbox_path: Optional[Path] = None  # defaults to data_dir / "outbox.txt"
    catalog_path: Optional[Path] = None  # defaults to the bundled catalog
    ui_dir: Optional[Path] = None  # built web client; served when set
    otp_ttl_seconds: int = 600
    graphical_ttl_seconds: int = 600
    password_ttl_seconds: int = 600
    grant_ttl_seconds: int = 60
    session_idle_seconds: int = 1800
    lockout_threshold: int = 5
    lockout_cooldown_seconds: int = 900

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        if self.outbox_path is None:
            self.outbox_path = self.data_dir / "outbox.txt"
        self.outbox_path = Path(self.outbox_path)
        if self.catalog_path is not None:
            self.catalog_path = Path(self.catalog_path)
        if self.ui_dir is not None:
            self.ui_dir = Path(self.ui_dir)


_ENV_KEYS = {
    "RINGVAULT_LISTEN_HOST": ("listen_host", str),
    "RINGVAULT_LISTEN_PORT": ("listen_port", int),
    "RINGVAULT_DATA_DIR": ("data_dir", Path),
    "RINGVAULT_OUTBOX": ("outbox_path", Path),
    "RINGVAULT_CATALOG": ("catalog_path", Path),
    "RINGVAULT_UI_DIR": ("ui_dir", Path),
    "RINGVAULT_OTP_TTL": ("otp_ttl_seconds", int),
    "RINGVAULT_GRAPHICAL_TTL": ("graphical_ttl_seconds", int),
    "RINGVAULT_PASSWORD_TTL": ("password_ttl_seconds", int),
    "RINGVAULT_GRANT_TTL": ("grant_ttl_seconds", int),
    "RINGVAULT_SESSION_IDLE": ("session_idle_seconds", int),
    "RINGVAULT_LOCKOUT_THRESHOLD": ("lockout_threshold", int),
    "RINGVAULT_LOCKOUT_COOLDOWN": ("lockout_cooldown_seconds", int),
}


def load_config(path: Optional[Path] = None,
                env: Optional[Mapping[str, str]] = None) -> ServerConfig:
    env = os.environ if env is None else env
    values = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
        for key, value in raw.items():
            if key not in ServerConfig.__dataclass_fields__:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = value
    for env_key, (key, cast) in _ENV_KEYS.items():
        if env_key in env:
            values[key] = cast(env[env_key])
    return ServerConfig(**values)
