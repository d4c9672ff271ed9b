"""Pipeline settings and their versioned ``key = value`` file format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import FormatError
from .lexicon import OOVMode, SimilarityConfig

CONFIG_HEADER = "recipealign-config v1"


@dataclass(frozen=True)
class Config:
    gamma: float = 0.7
    tau: float = 0.2
    canon_threshold: float = 0.75
    distance_scale: float = 1.0
    oov_mode: str = OOVMode.EDIT_DISTANCE.value
    min_coverage: float = 0.5
    max_shift: float = 3.0
    rank: int = 50
    weight_visual: float = 0.5
    weight_affordance: float = 0.5
    smoothing: float = 1.0

    def __post_init__(self):
        OOVMode(self.oov_mode)
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")

    @property
    def similarity(self) -> SimilarityConfig:
        return SimilarityConfig(OOVMode(self.oov_mode), self.distance_scale)

    @property
    def weights(self) -> tuple[float, float]:
        return self.weight_visual, self.weight_affordance

    def updated(self, **overrides) -> "Config":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


_TYPES = {f.name: f.type for f in fields(Config)}
_CASTS = {"float": float, "int": int, "str": str}


def format_config(cfg: Config) -> str:
    lines = [CONFIG_HEADER]
    for k, v in asdict(cfg).items():
        lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines) + "\n"


def write_config(cfg: Config, path) -> None:
    Path(path).write_text(format_config(cfg), encoding="utf-8")


def read_config(path) -> Config:
    """Read a config file; keys not present keep their defaults."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != CONFIG_HEADER:
        raise FormatError(f"first line must be {CONFIG_HEADER!r}", path, 1)
    values = {}
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or key not in _TYPES:
            raise FormatError(f"unknown setting {key!r}", path, lineno)
        try:
            values[key] = _CASTS[_TYPES[key]](raw)
        except ValueError:
            raise FormatError(f"bad value for {key}: {raw!r}", path, lineno) from None
    try:
        return Config(**values)
    except ValueError as e:
        raise FormatError(str(e), path) from None
