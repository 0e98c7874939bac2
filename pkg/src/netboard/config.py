"""Line-oriented service configuration: ``key = value``, '#' comments."""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

from .errors import ConfigInvalid

DEFAULT_PORT = 8700


@dataclass
class ServiceConfig:
    data_dir: Path
    schema_dir: Path
    network_registry_path: Path
    synonym_table_path: Path | None = None
    stopwords_path: Path | None = None
    port: int = DEFAULT_PORT
    base_url: str = ""
    w_text: float = 1.0
    w_loc: float = 0.3
    w_fresh: float = 0.2
    decay_km: float = 25.0
    page_size: int = 20
    frontend_dir: Path | None = None

    def __post_init__(self):
        if not (1 <= self.port <= 65535):
            raise ConfigInvalid(f"port must be in 1..65535, got {self.port}")
        for name in ("w_text", "w_loc", "w_fresh"):
            if getattr(self, name) < 0:
                raise ConfigInvalid(f"{name} must be >= 0")
        if self.decay_km <= 0:
            raise ConfigInvalid("decay_km must be > 0")
        if self.page_size < 1:
            raise ConfigInvalid("page_size must be >= 1")
        if not self.base_url:
            self.base_url = f"http://localhost:{self.port}"


_PATH_KEYS = {
    "data_dir",
    "schema_dir",
    "network_registry_path",
    "synonym_table_path",
    "stopwords_path",
    "frontend_dir",
}
_INT_KEYS = {"port", "page_size"}
_FLOAT_KEYS = {"w_text", "w_loc", "w_fresh", "decay_km"}
_REQUIRED = ("data_dir", "schema_dir", "network_registry_path")


def load_config(path: str | Path) -> ServiceConfig:
    """Parse and validate a config file; paths are resolved relative to it."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigInvalid(f"config file not found: {config_path}")
    base = config_path.parent
    known = {f.name for f in dataclass_fields(ServiceConfig)}
    values: dict = {}
    for lineno, raw in enumerate(config_path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigInvalid(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _PATH_KEYS:
                values[key] = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigInvalid(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    missing = [key for key in _REQUIRED if key not in values]
    if missing:
        raise ConfigInvalid(f"missing required keys: {', '.join(missing)}")
    return ServiceConfig(**values)
