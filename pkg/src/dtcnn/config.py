"""Run configuration: defaults, ``key = value`` files and command-line overrides.

Precedence is defaults < config file < flags. Training hyperparameters left
unset fall back to the named ``preset`` (one row of the hyperparameter
table per dataset family).
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError, ConstraintError
from .nn.sgd import PRESETS, TrainConfig

_TRAIN_KEYS = ("lr", "gamma", "weight_decay", "momentum", "batch_size", "num_iters", "steps")


@dataclass(frozen=True)
class RunConfig:
    dataset: str = "data"
    out: str = "run"
    protocol: str = "random:1:0.5"
    trial: int = 0
    subset: str = "xy+xt+yt"
    arch: str = "tcnn50"
    preset: str = "dyntex++"
    lr: float | None = None
    gamma: float | None = None
    weight_decay: float | None = None
    momentum: float | None = None
    batch_size: int | None = None
    num_iters: int | None = None
    steps: tuple[int, ...] | None = None
    m: int = 10
    n: int = 50
    seed: int = 0
    init: str = "gaussian"
    init_std: float = 0.01
    mirror: bool = True
    mean_subtract: bool = True
    fusion: str = "sum"
    jobs: int = 1

    def train_config(self) -> TrainConfig:
        try:
            base = PRESETS[self.preset.lower()]
        except KeyError:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        overrides = {k: getattr(self, k) for k in _TRAIN_KEYS if getattr(self, k) is not None}
        try:
            return base.replace(**overrides)
        except ConstraintError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def merged(self, values: dict) -> "RunConfig":
        """Return a copy with ``values`` (already parsed or raw strings) applied."""
        parsed = {}
        for key, raw in values.items():
            name = key.replace("-", "_")
            if name not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            parsed[name] = _coerce(name, raw) if isinstance(raw, str) else raw
        return replace(self, **parsed)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if name == "steps":
            return tuple(int(s) for s in raw.replace(",", " ").split()) if raw else ()
        if "bool" in kind:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}")
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_config(path=None, flags: dict | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = cfg.merged(parse_config_text(text, str(path)))
    if flags:
        cfg = cfg.merged({k: v for k, v in flags.items() if v is not None})
    return cfg


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ",".join(str(s) for s in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
