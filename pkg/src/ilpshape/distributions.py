"""Seedable samplers for the interpacket delay (D) and payload size (X).

Delays are in seconds and support constant and uniform modes. Sizes are in
bytes and additionally support a normal truncated to ``[low, high]`` by
rejection, rounded to the nearest integer.
"""

import enum
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .errors import ConfigError
from .wire import MAX_SHAPED_LEN


class Kind(enum.Enum):
    CONSTANT = "constant"
    UNIFORM = "uniform"
    TRUNCNORM = "truncnorm"


_KIND_CODES = {Kind.CONSTANT: 0, Kind.UNIFORM: 1, Kind.TRUNCNORM: 2}
_ARITY = {Kind.CONSTANT: 1, Kind.UNIFORM: 2, Kind.TRUNCNORM: 4}

DELAY = "seconds"
SIZE = "bytes"


@dataclass(frozen=True)
class DistributionSpec:
    """A distribution ``kind`` with its parameter tuple and a units tag.

    Parameters are ``(value,)`` for constant, ``(low, high)`` for uniform and
    ``(mean, stddev, low, high)`` for the truncated normal.
    """

    kind: Kind
    params: tuple
    units: str = SIZE

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        self.validate()

    @classmethod
    def constant(cls, value, units=SIZE):
        return cls(Kind.CONSTANT, (value,), units)

    @classmethod
    def uniform(cls, low, high, units=SIZE):
        return cls(Kind.UNIFORM, (low, high), units)

    @classmethod
    def truncated_normal(cls, mean, stddev, low, high, units=SIZE):
        return cls(Kind.TRUNCNORM, (mean, stddev, low, high), units)

    @property
    def is_delay(self):
        return self.units == DELAY

    def validate(self):
        if self.units not in (DELAY, SIZE):
            raise ConfigError(f"unknown units tag {self.units!r}")
        if len(self.params) != _ARITY[self.kind]:
            raise ConfigError(f"{self.kind.value} takes {_ARITY[self.kind]} parameters, got {len(self.params)}")
        if not all(math.isfinite(p) for p in self.params):
            raise ConfigError("distribution parameters must be finite")
        if self.is_delay and self.kind == Kind.TRUNCNORM:
            raise ConfigError("truncated normal is not supported for delays")
        if self.kind == Kind.CONSTANT:
            (v,) = self.params
            if v <= 0:
                raise ConfigError(f"constant value must be positive, got {v}")
        elif self.kind == Kind.UNIFORM:
            lo, hi = self.params
            if not 0 <= lo <= hi:
                raise ConfigError(f"uniform bounds need 0 <= low <= high, got [{lo}, {hi}]")
        else:
            mean, sd, lo, hi = self.params
            if sd <= 0:
                raise ConfigError("truncated normal stddev must be positive")
            if not lo < hi:
                raise ConfigError("truncated normal needs low < high")
            mass = _phi_cdf((hi - mean) / sd) - _phi_cdf((lo - mean) / sd)
            if mass < 1e-9:
                raise ConfigError("truncation window holds negligible probability mass")
        if not self.is_delay:
            self._validate_size_bounds()

    def _validate_size_bounds(self):
        bounds = self.params[2:] if self.kind == Kind.TRUNCNORM else self.params
        for b in bounds:
            if b != int(b):
                raise ConfigError(f"size bounds must be integers, got {b}")
            if not 1 <= b <= MAX_SHAPED_LEN:
                raise ConfigError(f"size bound {int(b)} outside [1, {MAX_SHAPED_LEN}]")

    def kernel_args(self):
        """Kind code and padded parameter tuple for the sampling kernels."""
        width = 2 if self.is_delay else 4
        padded = (self.params + (0.0,) * 4)[:width]
        return _KIND_CODES[self.kind], padded

    def with_param(self, index, value):
        params = list(self.params)
        params[index] = value
        return replace(self, params=tuple(params))

    def to_text(self):
        return " ".join([self.kind.value] + [_fmt(p) for p in self.params])

    @classmethod
    def from_text(cls, text, units):
        parts = text.replace(",", " ").split()
        if not parts:
            raise ConfigError("empty distribution")
        try:
            kind = Kind(parts[0].lower())
        except ValueError:
            raise ConfigError(f"unknown distribution kind {parts[0]!r}") from None
        try:
            params = tuple(float(p) for p in parts[1:])
        except ValueError as exc:
            raise ConfigError(f"bad distribution parameter in {text!r}") from exc
        return cls(kind, params, units)


def _fmt(v):
    return str(int(v)) if v == int(v) else repr(v)


def _phi_cdf(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _phi_pdf(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ShaperConfig:
    delay_dist: DistributionSpec
    size_dist: DistributionSpec
    rng_seed: int | None = None
    max_queue_bytes: int | None = None

    def __post_init__(self):
        if not self.delay_dist.is_delay:
            raise ConfigError("delay_dist must carry the seconds units tag")
        if self.size_dist.is_delay:
            raise ConfigError("size_dist must carry the bytes units tag")
        if self.rng_seed is not None and not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")
        if self.max_queue_bytes is not None and self.max_queue_bytes < 0:
            raise ConfigError("max_queue_bytes must be non-negative")

    def with_seed(self, seed):
        return replace(self, rng_seed=seed)


def high_latency(seed=None, **overrides):
    """Random schedule: uniform delay on [0, 0.6] s and size on [50, 200] B."""
    cfg = ShaperConfig(
        delay_dist=DistributionSpec.uniform(0.0, 0.6, DELAY),
        size_dist=DistributionSpec.uniform(50, 200, SIZE),
        rng_seed=seed,
    )
    return replace(cfg, **overrides)


def low_latency(seed=None, **overrides):
    """Constant-rate schedule: 0.05 s between 120-byte records."""
    cfg = ShaperConfig(
        delay_dist=DistributionSpec.constant(0.05, DELAY),
        size_dist=DistributionSpec.constant(120, SIZE),
        rng_seed=seed,
    )
    return replace(cfg, **overrides)


PRESETS = {"high-latency": high_latency, "low-latency": low_latency}


def make_rng(seed=None, kernels=None):
    """Schedule generator for ``seed``; OS entropy when ``seed`` is None."""
    kernels = kernels or _backend.kernels
    if seed is None:
        seed = int.from_bytes(os.urandom(8), "little")
    return kernels.Xoshiro256(seed)


def split_rngs(seed=None, kernels=None):
    """Return ``(schedule_rng, fill_rng)``: two non-overlapping streams.

    The fill stream is the schedule stream jumped ahead by 2**128 draws, so
    padding consumption can never perturb the (delay, size) schedule.
    """
    sched = make_rng(seed, kernels)
    fill = sched.copy()
    fill.jump()
    return sched, fill


def sample_delay(spec, rng, kernels=None):
    if not spec.is_delay:
        raise ConfigError("sample_delay needs a seconds-tagged spec")
    kernels = kernels or _backend.kernels
    code, (a, b) = spec.kernel_args()
    return kernels.sample_delay(rng, code, a, b)


def sample_size(spec, rng, kernels=None):
    if spec.is_delay:
        raise ConfigError("sample_size needs a bytes-tagged spec")
    kernels = kernels or _backend.kernels
    code, (a, b, c, d) = spec.kernel_args()
    return kernels.sample_size(rng, code, a, b, c, d)


def draw_schedule(config, rng, n, kernels=None):
    """``n`` ticks worth of (delay, size) pairs, in Algorithm-1 order."""
    kernels = kernels or _backend.kernels
    dcode, dargs = config.delay_dist.kernel_args()
    scode, sargs = config.size_dist.kernel_args()
    return kernels.draw_schedule(rng, dcode, dargs, scode, sargs, n)


def expected_value(spec):
    if spec.kind == Kind.CONSTANT:
        return spec.params[0]
    if spec.kind == Kind.UNIFORM:
        lo, hi = spec.params
        return (lo + hi) / 2.0
    mean, sd, lo, hi = spec.params
    a, b = (lo - mean) / sd, (hi - mean) / sd
    return mean + sd * (_phi_pdf(a) - _phi_pdf(b)) / (_phi_cdf(b) - _phi_cdf(a))


def cdf(spec, x):
    """CDF of the sampled values, vectorized over ``x``.

    Size distributions are discrete: uniform sizes are equiprobable integers
    and truncated-normal sizes are the rounded continuous draw.
    """
    x = np.asarray(x, dtype=float)
    if spec.kind == Kind.CONSTANT:
        return (x >= spec.params[0]).astype(float)
    if spec.kind == Kind.UNIFORM:
        lo, hi = spec.params
        if spec.is_delay:
            if hi == lo:
                return (x >= lo).astype(float)
            return np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        k = np.floor(x)
        return np.clip((k - lo + 1) / (hi - lo + 1), 0.0, 1.0)
    from scipy.special import ndtr

    mean, sd, lo, hi = spec.params
    edge = np.clip(np.floor(x) + 0.5, lo, hi)
    za, zb = (lo - mean) / sd, (hi - mean) / sd
    return (ndtr((edge - mean) / sd) - ndtr(za)) / (ndtr(zb) - ndtr(za))


def lattice_support(spec):
    """Integer ``(low, high)`` support for size specs; ``None`` for delays."""
    if spec.is_delay:
        return None
    if spec.kind == Kind.CONSTANT:
        v = int(spec.params[0])
        return v, v
    lo, hi = spec.params[-2:]
    return int(lo), int(hi)
