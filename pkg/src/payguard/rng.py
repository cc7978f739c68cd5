"""Deterministic random numbers.

A splitmix64 generator carried as a single 64-bit word, so training runs
can persist and restore it exactly (the checkpoint stores the word). Bulk
normal draws go through the active kernel backend; scalar helpers stay in
Python. Both paths consume the same underlying 64-bit stream.
"""

from array import array

from . import backend
from .errors import DomainError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 2.0 ** -53


def _mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed, *tags):
    """Stable sub-stream seed from a base seed and arbitrary str/int tags.

    Replaces Python's hash(), which is randomized per process for strings.
    """
    h = seed & _MASK64
    for tag in tags:
        data = tag.encode() if isinstance(tag, str) else int(tag).to_bytes(8, "little", signed=False)
        for byte in data:
            h = _mix((h + _GOLDEN + byte) & _MASK64)
    return h


class Rng:
    """splitmix64 stream with uniform/normal/integer draws."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = seed & _MASK64

    @classmethod
    def from_state(cls, state):
        """Resume a stream exactly where a saved one left off."""
        rng = cls(0)
        rng.state = state & _MASK64
        return rng

    def clone(self):
        return Rng.from_state(self.state)

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK64
        return _mix(self.state)

    def uniform(self):
        """One double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniforms(self, n):
        return array("d", [self.uniform() for _ in range(n)])

    def normals(self, n):
        """n standard normals (Box-Muller, pair-consuming)."""
        buf, self.state = backend.kernels.fill_normal(self.state, n)
        return buf

    def normal(self):
        return self.normals(1)[0]

    def randint(self, n):
        """One integer in [0, n) by multiply-shift."""
        if n <= 0:
            raise DomainError("randint needs n > 0, got {}".format(n))
        return (self.next_u64() * n) >> 64

    def randints(self, count, n):
        return [self.randint(n) for _ in range(count)]

    def shuffle(self, items):
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
        return items
