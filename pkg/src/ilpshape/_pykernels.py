"""Pure-Python kernels: xoshiro256** generator and schedule samplers.

Mirrors ``_kernels.pyx`` operation for operation; both backends must yield
bit-identical streams for the same seed.
"""

import math

MASK64 = 0xFFFFFFFFFFFFFFFF

KIND_CONSTANT = 0
KIND_UNIFORM = 1
KIND_TRUNCNORM = 2

_JUMP = (0x180EC6D33CFD0ABA, 0xD5A61266F0C9392C, 0xA9582618E03FC9AA, 0x39ABDC4529B1661C)
_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0

BACKEND = "python"


def splitmix64(x):
    """Return ``(next_state, output)`` for one splitmix64 step."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


class Xoshiro256:
    """xoshiro256** (Blackman & Vigna), seeded through splitmix64."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed=0):
        x = seed & MASK64
        x, self.s0 = splitmix64(x)
        x, self.s1 = splitmix64(x)
        x, self.s2 = splitmix64(x)
        x, self.s3 = splitmix64(x)

    def get_state(self):
        return (self.s0, self.s1, self.s2, self.s3)

    def set_state(self, state):
        s0, s1, s2, s3 = (int(v) & MASK64 for v in state)
        if not (s0 | s1 | s2 | s3):
            raise ValueError("xoshiro256 state must not be all zero")
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3

    def copy(self):
        other = Xoshiro256.__new__(Xoshiro256)
        other.s0, other.s1, other.s2, other.s3 = self.s0, self.s1, self.s2, self.s3
        return other

    def next_u64(self):
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        r = (s1 * 5) & MASK64
        result = ((((r << 7) | (r >> 57)) & MASK64) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def jump(self):
        """Advance by 2**128 steps; used to split off independent substreams."""
        s0 = s1 = s2 = s3 = 0
        for word in _JUMP:
            for b in range(64):
                if (word >> b) & 1:
                    s0 ^= self.s0
                    s1 ^= self.s1
                    s2 ^= self.s2
                    s3 ^= self.s3
                self.next_u64()
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3

    def random(self):
        """Uniform double on [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * _INV_2_53

    def bounded(self, n):
        """Unbiased integer on [0, n) by modulo rejection."""
        if n <= 0:
            raise ValueError("bound must be positive")
        threshold = (0x10000000000000000 - n) % n
        while True:
            v = self.next_u64()
            if v >= threshold:
                return v % n

    def normal(self):
        # Box-Muller, cosine branch only; no cached second variate.
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)

    def fill_bytes(self, n):
        if n <= 0:
            return b""
        words = (n + 7) >> 3
        nxt = self.next_u64
        buf = b"".join([nxt().to_bytes(8, "little") for _ in range(words)])
        return buf[:n]


def sample_delay(rng, kind, a, b):
    if kind == KIND_CONSTANT:
        return a
    if kind == KIND_UNIFORM:
        return a + (b - a) * rng.random()
    raise ValueError(f"unsupported delay kind {kind}")


def sample_size(rng, kind, a, b, c, d):
    if kind == KIND_CONSTANT:
        return int(a)
    if kind == KIND_UNIFORM:
        return int(a) + rng.bounded(int(b) - int(a) + 1)
    if kind == KIND_TRUNCNORM:
        # a=mean, b=stddev, c=low, d=high
        while True:
            z = a + b * rng.normal()
            if c <= z <= d:
                return int(math.floor(z + 0.5))
    raise ValueError(f"unsupported size kind {kind}")


def draw_schedule(rng, dkind, dparams, skind, sparams, n):
    """Draw ``n`` (delay, size) pairs in tick order: delay first, then size."""
    da, db = dparams
    sa, sb, sc, sd = sparams
    delays = [0.0] * n
    sizes = [0] * n
    for i in range(n):
        delays[i] = sample_delay(rng, dkind, da, db)
        sizes[i] = sample_size(rng, skind, sa, sb, sc, sd)
    return delays, sizes
