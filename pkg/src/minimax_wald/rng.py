"""Counter-based random streams.

Every replication ``i`` of a campaign seeded with ``master_seed`` owns the
stream key ``stream_key(master_seed, i)``; draw ``k`` of that stream is
``mix64(key + (k + 1) * GOLDEN)`` (the SplitMix64 output function applied to
a Weyl sequence).  Because a draw depends only on ``(master_seed, i, k)``,
replications can be executed in any order and on any number of threads and
still produce bit-identical results.

``mix64`` is the SplitMix64 finalizer::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

with all arithmetic modulo 2**64.  Uniforms use the top 53 bits and are
offset by half an ulp so they lie strictly inside (0, 1).  Normals are
produced in Box-Muller pairs from two consecutive uniforms; the second member
of a pair is cached and returned by the next call.

The pure-Python :class:`CounterStream` and the numba helpers at the bottom of
this module implement the same sequence and are tested against each other.
"""

import math

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53

# salts for auxiliary streams that must not collide with the per-replication ones
SALT_STATE = 0x5DEECE66D
SALT_PHASE = 0xC2B2AE3D27D4EB4F


def mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(master_seed, index):
    """Key of replication ``index`` under ``master_seed`` (both non-negative ints)."""
    if master_seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    base = mix64((master_seed & MASK64) + GOLDEN)
    return mix64((base + (index + 1) * GOLDEN) & MASK64)


def stream_keys(master_seed, count, salt=0):
    """Vector of ``count`` stream keys as ``uint64``; ``salt`` selects an independent family."""
    seed = master_seed ^ salt if salt else master_seed
    if seed < 0:
        raise ValueError("seed must be non-negative")
    base = np.uint64(mix64((seed & MASK64) + GOLDEN))
    idx = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_array(base + idx * np.uint64(GOLDEN))


def _mix64_array(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))


class CounterStream:
    """Sequential view of one counter-based stream."""

    def __init__(self, key, counter=0):
        self.key = int(key) & MASK64
        self.counter = counter
        self._spare = None

    def next_u64(self):
        self.counter += 1
        return mix64((self.key + self.counter * GOLDEN) & MASK64)

    def uniform(self):
        return ((self.next_u64() >> 11) + 0.5) * _TWO_M53

    def normal(self):
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def __call__(self):
        return self.uniform()


# numba twins -----------------------------------------------------------------

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_U1 = np.uint64(1)


@numba.njit(inline="always", cache=True)
def nb_mix64(z):
    z = (z ^ (z >> _U30)) * _U_M1
    z = (z ^ (z >> _U27)) * _U_M2
    return z ^ (z >> _U31)


@numba.njit(inline="always", cache=True)
def nb_uniform(key, counter):
    """Return (uniform, new_counter)."""
    # explicit casts: mixing uint64 with int64 would promote to float64
    counter = np.uint64(counter) + _U1
    x = nb_mix64(np.uint64(key) + counter * _U_GOLDEN)
    return (float(x >> _U11) + 0.5) * _TWO_M53, counter


@numba.njit(inline="always", cache=True)
def nb_normal_pair(key, counter):
    """Return (z_cos, z_sin, new_counter) from two consecutive uniforms."""
    u1, counter = nb_uniform(key, counter)
    u2, counter = nb_uniform(key, counter)
    r = math.sqrt(-2.0 * math.log(u1))
    return r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2), counter
