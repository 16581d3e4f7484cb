"""Counter-based random streams.

Every stream is a splitmix64 sequence keyed by ``(seed, stream_id)``: draw
``k`` of a stream is ``mix(key + (k + 1) * GAMMA)``.  Because a draw depends
only on its key and index, any number of replicas can be evaluated in any
order, on any number of threads, and the results do not change.
"""

import numpy as np

GENERATOR_NAME = "splitmix64-counter"

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# doubles in [0, 1) carry 53 bits
_TWO53 = 1 << 53
_INV53 = 1.0 / _TWO53


def mix64(z):
    """splitmix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z):
    """Vectorized :func:`mix64` over a uint64 array (wraps mod 2**64)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_key(seed, stream_id):
    """Key of stream ``stream_id`` under a 64-bit ``seed``."""
    base = mix64(seed)
    return mix64(base + (stream_id + 1) * GAMMA)


def stream_keys(seed, start, stop):
    """Keys of streams ``start .. stop-1`` as a uint64 array."""
    base = mix64(seed)
    ids = np.arange(start + 1, stop + 1, dtype=np.uint64)
    return mix64_array(np.uint64(base) + ids * np.uint64(GAMMA))


def bernoulli_threshold(prob):
    """Integer threshold ``t`` so that ``(x >> 11) < t`` has probability ``prob``.

    ``prob * 2**53`` is exact for any double, so the comparison is exact too.
    """
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability {prob!r} outside [0, 1]")
    return int(float(prob) * _TWO53)


def uniform_open0(x):
    """Map a 64-bit draw to a double in (0, 1]."""
    return ((x >> 11) + 1) * _INV53


class SplitMixStream:
    """Sequential view of one counter-based stream.

    >>> s = SplitMixStream(seed=0, stream_id=3)
    >>> s.next_u64() == SplitMixStream(0, 3).next_u64()
    True
    """

    def __init__(self, seed=0, stream_id=0):
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id)
        self.key = stream_key(self.seed, self.stream_id)
        self.counter = 0

    def next_u64(self):
        self.counter += 1
        return mix64(self.key + self.counter * GAMMA)

    def next_double(self):
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV53

    def block(self, count):
        """The next ``count`` draws as a uint64 array."""
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        return mix64_array(np.uint64(self.key) + idx * np.uint64(GAMMA))

    def __repr__(self):
        return (f"SplitMixStream(seed={self.seed}, stream_id={self.stream_id}, "
                f"counter={self.counter})")
