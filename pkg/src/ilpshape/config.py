"""Flat ``key = value`` configuration files.

Grammar, one entry per line; blank lines and ``#`` comments are ignored::

    preset          = high-latency | low-latency      (optional base)
    delay           = constant 0.05 | uniform 0 0.6
    size            = constant 120 | uniform 50 200 | truncnorm 125 30 50 200
    seed            = 7                                (unsigned 64-bit)
    max_queue_bytes = 1000000                          (optional)
    wire_overhead   = 40                               (bytes/record, replay only)

Later keys override earlier ones; ``delay`` and ``size`` override a preset.
"""

import os
from dataclasses import dataclass, replace
from importlib import resources

from .distributions import DELAY, PRESETS, SIZE, DistributionSpec, ShaperConfig
from .errors import ConfigError
from .replay import DEFAULT_WIRE_OVERHEAD

KEYS = ("preset", "delay", "size", "seed", "max_queue_bytes", "wire_overhead")


@dataclass(frozen=True)
class RunSettings:
    shaper: ShaperConfig
    wire_overhead: int = DEFAULT_WIRE_OVERHEAD


def parse_config(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config(path):
    """Read a config file; a bare name such as ``lowlat.cfg`` also finds the bundled copy."""
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read(), source=str(path))
    except FileNotFoundError as exc:
        name = os.path.basename(str(path))
        bundled = resources.files("ilpshape").joinpath("data").joinpath(name)
        if name == str(path) and bundled.is_file():
            return parse_config(bundled.read_text(encoding="utf-8"), source=name)
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _int(key, value):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def resolve(values):
    """Build :class:`RunSettings` from merged key/value pairs."""
    preset = values.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]()
    else:
        base = None
    delay = values.get("delay")
    size = values.get("size")
    if base is None and (delay is None or size is None):
        raise ConfigError("config needs both delay and size (or a preset)")
    delay_dist = DistributionSpec.from_text(delay, DELAY) if delay else base.delay_dist
    size_dist = DistributionSpec.from_text(size, SIZE) if size else base.size_dist
    seed = values.get("seed")
    mqb = values.get("max_queue_bytes")
    cfg = ShaperConfig(
        delay_dist=delay_dist,
        size_dist=size_dist,
        rng_seed=None if seed in (None, "", "none") else _int("seed", seed),
        max_queue_bytes=None if mqb in (None, "", "none") else _int("max_queue_bytes", mqb),
    )
    wire = _int("wire_overhead", values.get("wire_overhead", DEFAULT_WIRE_OVERHEAD))
    if wire < 0:
        raise ConfigError("wire_overhead must be non-negative")
    return RunSettings(cfg, wire)


def format_config(settings):
    cfg = settings.shaper
    lines = [
        f"delay = {cfg.delay_dist.to_text()}",
        f"size = {cfg.size_dist.to_text()}",
        f"seed = {cfg.rng_seed if cfg.rng_seed is not None else 'none'}",
        f"max_queue_bytes = {cfg.max_queue_bytes if cfg.max_queue_bytes is not None else 'none'}",
        f"wire_overhead = {settings.wire_overhead}",
    ]
    return "\n".join(lines) + "\n"


def with_seed(settings, seed):
    return replace(settings, shaper=settings.shaper.with_seed(seed))
