# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: xoshiro256** generator and schedule samplers.

Bit-compatible with ``_pykernels``; see that module for the reference logic.
"""

from libc.math cimport sqrt, log, cos, floor, M_PI
from libc.stdint cimport uint64_t, uint8_t
from cpython.bytes cimport PyBytes_FromStringAndSize, PyBytes_AS_STRING

KIND_CONSTANT = 0
KIND_UNIFORM = 1
KIND_TRUNCNORM = 2

BACKEND = "cython"

cdef uint64_t[4] _JUMP = [0x180EC6D33CFD0ABAULL, 0xD5A61266F0C9392CULL,
                          0xA9582618E03FC9AAULL, 0x39ABDC4529B1661CULL]
cdef double _INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _splitmix(uint64_t* x) nogil:
    x[0] += 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = x[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def splitmix64(x):
    cdef uint64_t s = <uint64_t>(x & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t out = _splitmix(&s)
    return s, out


cdef class Xoshiro256:
    cdef uint64_t s[4]

    def __init__(self, seed=0):
        cdef uint64_t x = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
        self.s[0] = _splitmix(&x)
        self.s[1] = _splitmix(&x)
        self.s[2] = _splitmix(&x)
        self.s[3] = _splitmix(&x)

    def get_state(self):
        return (self.s[0], self.s[1], self.s[2], self.s[3])

    def set_state(self, state):
        vals = [int(v) & 0xFFFFFFFFFFFFFFFF for v in state]
        if len(vals) != 4:
            raise ValueError("xoshiro256 state has four words")
        if not any(vals):
            raise ValueError("xoshiro256 state must not be all zero")
        for i in range(4):
            self.s[i] = <uint64_t>vals[i]

    def copy(self):
        cdef Xoshiro256 other = Xoshiro256.__new__(Xoshiro256)
        other.s[0] = self.s[0]
        other.s[1] = self.s[1]
        other.s[2] = self.s[2]
        other.s[3] = self.s[3]
        return other

    cdef inline uint64_t _next(self) nogil:
        cdef uint64_t result = _rotl(self.s[1] * 5, 7) * 9
        cdef uint64_t t = self.s[1] << 17
        self.s[2] ^= self.s[0]
        self.s[3] ^= self.s[1]
        self.s[1] ^= self.s[2]
        self.s[0] ^= self.s[3]
        self.s[2] ^= t
        self.s[3] = _rotl(self.s[3], 45)
        return result

    cdef inline double _random(self) nogil:
        return (self._next() >> 11) * _INV_2_53

    cdef inline uint64_t _bounded(self, uint64_t n) nogil:
        cdef uint64_t threshold = (0 - n) % n
        cdef uint64_t v
        while True:
            v = self._next()
            if v >= threshold:
                return v % n

    cdef inline double _normal(self) nogil:
        cdef double u1 = 1.0 - self._random()
        cdef double u2 = self._random()
        return sqrt(-2.0 * log(u1)) * cos((2.0 * M_PI) * u2)

    def next_u64(self):
        return self._next()

    def jump(self):
        cdef uint64_t s0 = 0, s1 = 0, s2 = 0, s3 = 0
        cdef int i, b
        for i in range(4):
            for b in range(64):
                if (_JUMP[i] >> b) & 1:
                    s0 ^= self.s[0]
                    s1 ^= self.s[1]
                    s2 ^= self.s[2]
                    s3 ^= self.s[3]
                self._next()
        self.s[0] = s0
        self.s[1] = s1
        self.s[2] = s2
        self.s[3] = s3

    def random(self):
        return self._random()

    def bounded(self, n):
        if n <= 0:
            raise ValueError("bound must be positive")
        if n > 0xFFFFFFFFFFFFFFFF:
            raise ValueError("bound exceeds 64 bits")
        return self._bounded(<uint64_t>n)

    def normal(self):
        return self._normal()

    def fill_bytes(self, Py_ssize_t n):
        if n <= 0:
            return b""
        cdef Py_ssize_t words = (n + 7) >> 3
        cdef object out = PyBytes_FromStringAndSize(NULL, n)
        cdef uint8_t* p = <uint8_t*>PyBytes_AS_STRING(out)
        cdef Py_ssize_t i, j, pos = 0
        cdef uint64_t w
        for i in range(words):
            w = self._next()
            for j in range(8):
                if pos >= n:
                    break
                p[pos] = <uint8_t>(w >> (8 * j))
                pos += 1
        return out


cdef inline double _delay(Xoshiro256 rng, int kind, double a, double b) except? -1.0:
    if kind == 0:
        return a
    if kind == 1:
        return a + (b - a) * rng._random()
    raise ValueError(f"unsupported delay kind {kind}")


cdef inline long _size(Xoshiro256 rng, int kind, double a, double b, double c, double d) except? -1:
    cdef double z
    if kind == 0:
        return <long>a
    if kind == 1:
        return <long>a + <long>rng._bounded(<uint64_t>(<long>b - <long>a + 1))
    if kind == 2:
        while True:
            z = a + b * rng._normal()
            if c <= z <= d:
                return <long>floor(z + 0.5)
    raise ValueError(f"unsupported size kind {kind}")


def sample_delay(Xoshiro256 rng, int kind, double a, double b):
    return _delay(rng, kind, a, b)


def sample_size(Xoshiro256 rng, int kind, double a, double b, double c, double d):
    return _size(rng, kind, a, b, c, d)


def draw_schedule(Xoshiro256 rng, int dkind, dparams, int skind, sparams, Py_ssize_t n):
    cdef double da = dparams[0], db = dparams[1]
    cdef double sa = sparams[0], sb = sparams[1], sc = sparams[2], sd = sparams[3]
    cdef list delays = [0.0] * n
    cdef list sizes = [0] * n
    cdef Py_ssize_t i
    for i in range(n):
        delays[i] = _delay(rng, dkind, da, db)
        sizes[i] = _size(rng, skind, sa, sb, sc, sd)
    return delays, sizes
