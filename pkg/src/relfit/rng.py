"""Deterministic counter-based random number generation.

A splitmix64 stream: the state advances by a fixed odd constant and each
output is a finalizer hash of the state.  Streams for replicate indices
are derived by hashing (seed, index), so replicate i draws the same
numbers no matter which worker runs it or in what order.
"""

from __future__ import annotations

from .errors import InvalidArgument

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finalizer
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class Stream:
    """A single splitmix64 stream."""

    __slots__ = ("_state",)

    def __init__(self, state: int):
        self._state = state & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix64(self._state)

    def next_float(self) -> float:
        """Uniform draw in the open interval (0, 1)."""
        # 53-bit mantissa centered half an ulp off the lattice ends
        return (float(self.next_u64() >> 11) + 0.5) * (2.0 ** -53)


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise InvalidArgument(f"seed must be an integer, got {seed!r}")
    if seed < 0 or seed > _MASK:
        raise InvalidArgument("seed must fit in an unsigned 64-bit integer")
    return seed


def stream_for(seed: int, index: int) -> Stream:
    """Independent stream for one replicate, a pure hash of (seed, index)."""
    seed = check_seed(seed)
    if index < 0:
        raise InvalidArgument("replicate index must be non-negative")
    return Stream(_mix64(_mix64(seed) ^ _mix64((index + 1) & _MASK)))
