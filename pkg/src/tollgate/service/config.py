"""Flat `key = value` configuration with `plaza.<id> = <key>` entries for gate credentials."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8088
    data_dir: Optional[str] = None  # None -> in-memory only, no journal file
    toll_amount: int = 25
    deadline_ticks: int = 1000
    fine_surcharge_pct: int = 50
    ema_weight: float = 0.6
    hash_scheme: str = "sha256"  # or "plain" (tests only)
    admin_email: str = "admin@tollgate.example"
    admin_password: str = "change-me"
    session_ttl_ticks: int = 1_000_000
    plaza_keys: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str) -> "ServiceConfig":
        cfg = cls()
        plazas: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key.startswith("plaza."):
                plazas[key[len("plaza."):]] = value
            elif key in ("listen_host", "data_dir", "hash_scheme", "admin_email", "admin_password"):
                setattr(cfg, key, value)
            elif key in ("listen_port", "toll_amount", "deadline_ticks",
                         "fine_surcharge_pct", "session_ttl_ticks"):
                setattr(cfg, key, int(value))
            elif key == "ema_weight":
                cfg.ema_weight = float(value)
            else:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
        cfg.plaza_keys = plazas
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))
