"""Run configuration: CLI flags override a JSON config file, which overrides defaults."""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import MatrixParseError
from .linalg import DEFAULT_TOL


@dataclass
class Config:
    tol: float = DEFAULT_TOL
    seed: int = 0
    threads: int = 1
    dt: Optional[float] = None
    horizon: float = 10.0
    trajectories: int = 1000
    # slack allowed in the ordering chain of a report
    chain_tol: float = 1e-8
    certify_real: bool = True
    real_starts: int = 4
    samples: int = 500
    # names set by a config file or flag rather than left at their default
    explicit: frozenset = field(default=frozenset(), repr=False, compare=False)

    def to_dict(self):
        d = asdict(self)
        del d["explicit"]
        return d


def load_config(path=None, overrides=None) -> Config:
    """Defaults, then keys from ``path`` (JSON object), then non-None ``overrides``."""
    values = {}
    names = {f.name for f in fields(Config)} - {"explicit"}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise MatrixParseError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise MatrixParseError("config file must hold a JSON object")
        unknown = set(raw) - names
        if unknown:
            raise MatrixParseError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for k, v in (overrides or {}).items():
        if k in names and v is not None:
            values[k] = v
    cfg = Config(**values, explicit=frozenset(values))
    if cfg.tol <= 0 or cfg.chain_tol < 0:
        raise MatrixParseError("tolerances must be positive")
    if cfg.threads < 1:
        raise MatrixParseError("threads must be >= 1")
    return cfg
