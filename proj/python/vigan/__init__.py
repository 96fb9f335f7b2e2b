"""Video imitation experiments from Python.

Commands take a config as a dict (or nothing) plus keyword overrides using
dotted field names with underscores for dots, e.g. ``render__width=32``.
"""

import json

from . import _vigan
from ._vigan import (
    ConfigError,
    Env,
    Error,
    FormatError,
    ModalityError,
    ShapeError,
    ValueError,
    load_demos,
    occupancy,
)

__all__ = [
    "ConfigError", "Env", "Error", "FormatError", "ModalityError", "ShapeError", "ValueError",
    "load_demos", "occupancy", "config", "train_expert", "record_demos", "imitate",
    "ingest_frames", "verify_injectivity", "evaluate",
]


def config(base=None, **overrides):
    """Fully resolved config dict; raises ConfigError on bad fields."""
    cfg = json.loads(_vigan.default_config())
    for source in _nest(base or {}), _nest(overrides):
        _merge(cfg, source)
    return json.loads(_vigan.resolve_config(json.dumps(cfg)))


def _nest(flat):
    out = {}
    for key, value in flat.items():
        if isinstance(value, dict):
            value = _nest(value)
        node = out
        parts = key.split("__")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        if isinstance(value, dict) and isinstance(node.get(parts[-1]), dict):
            _merge(node[parts[-1]], value)
        else:
            node[parts[-1]] = value
    return out


def _merge(into, src):
    for key, value in src.items():
        if isinstance(value, dict) and isinstance(into.get(key), dict):
            _merge(into[key], value)
        else:
            into[key] = value


def _run(fn, base, overrides):
    return fn(json.dumps(config(base, **overrides)))


def train_expert(base=None, **overrides):
    return _run(_vigan.train_expert, base, overrides)


def record_demos(base=None, **overrides):
    return _run(_vigan.record_demos, base, overrides)


def imitate(base=None, **overrides):
    return _run(_vigan.imitate, base, overrides)


def ingest_frames(base=None, **overrides):
    return _run(_vigan.ingest_frames, base, overrides)


def verify_injectivity(base=None, **overrides):
    return json.loads(_run(_vigan.verify_injectivity, base, overrides))


def evaluate(base=None, **overrides):
    return _run(_vigan.evaluate, base, overrides)
