"""Server configuration: JSON file with environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields

from .engine import EngineConfig
from .gateway import GatewayConfig


@dataclass
class ServerConfig:
    http_host: str = "127.0.0.1"
    http_port: int = 8750
    device_host: str = "127.0.0.1"
    device_port: int = 8751
    lead_ms: int = 150
    grace_ms: int = 2000
    heartbeat_ms: int = 1000
    stale_multiplier: int = 3
    tick_ms: int = 50
    log_path: str = ""

    def engine_config(self) -> EngineConfig:
        return EngineConfig(lead_ms=self.lead_ms, grace_ms=self.grace_ms)

    def gateway_config(self) -> GatewayConfig:
        return GatewayConfig(
            heartbeat_ms=self.heartbeat_ms, stale_multiplier=self.stale_multiplier
        )


_ENV_PREFIX = "SL_"


def load_config(path: str | None = None) -> ServerConfig:
    """Build a config from defaults, an optional JSON file, then SL_* env vars.

    Either layer may set any ServerConfig field; env names are the upper-cased
    field names with an SL_ prefix (SL_HTTP_PORT, SL_LEAD_MS, ...).
    """
    values: dict[str, object] = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
        for key, val in raw.items():
            if key not in _FIELD_TYPES:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = val
    for f in fields(ServerConfig):
        env = os.environ.get(_ENV_PREFIX + f.name.upper())
        if env is not None:
            values[f.name] = env

    kwargs: dict[str, object] = {}
    for name, typ in _FIELD_TYPES.items():
        if name not in values:
            continue
        val = values[name]
        kwargs[name] = int(val) if typ is int else str(val)
    return ServerConfig(**kwargs)


# field types arrive as strings under deferred annotations, hence the repr check
_FIELD_TYPES = {
    f.name: (int if "int" in str(f.type) else str) for f in fields(ServerConfig)
}
