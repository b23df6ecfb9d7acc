"""Counter-based randomness for trials.

Every trial owns a 64-bit seed, and every consumer of randomness (replacement
draws, uniform pairs, coins, order bits, adversary-internal draws, junta
selection) reads from its own substream.  A draw is a pure function of
(seed, stream id, counter), so the value consumed at step i does not depend on
how many draws other consumers made before it.  That property is what makes
trials bit-reproducible across engine implementations and worker pools, and it
is why an adversary that is queried but always overridden (p = 1) leaves the
random stream untouched.

The generator is the splitmix64 output function applied to an affine counter
walk.  It is small enough to restate inside compiled kernels; tests pin the two
implementations to each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MASK64 = (1 << 64) - 1

# splitmix64 constants
GOLDEN = 0x9E3779B97F4A7C15
MIX_A = 0xBF58476D1CE4E5B9
MIX_B = 0x94D049BB133111EB
STREAM_SALT = 0xD1B54A32D192ED03

# Substream ids.  These are part of the on-disk reproducibility contract:
# changing them changes every seeded result.
REPLACEMENT_STREAM = 1
PAIR_STREAM = 2
COIN_STREAM = 3
ORDER_STREAM = 4
ADVERSARY_STREAM = 5
JUNTA_STREAM = 6


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit bijection with good avalanche."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * MIX_B) & MASK64
    return z ^ (z >> 31)


def stream_base(seed: int, stream_id: int) -> int:
    """Starting point of one substream of a trial's seed."""
    return mix64((seed ^ mix64((stream_id * STREAM_SALT) & MASK64)) & MASK64)


def stream_u64(seed: int, stream_id: int, counter: int) -> int:
    """The counter-th 64-bit draw of a substream, independent of all others."""
    base = stream_base(seed, stream_id)
    return mix64((base + ((counter + 1) * GOLDEN)) & MASK64)


def bounded(h32: int, bound: int) -> int:
    """Map a 32-bit hash half onto [0, bound) by fixed-point multiply.

    The map is not exactly uniform (bias about bound / 2^32) which is
    irrelevant at population sizes; it is branch-free, which the compiled
    kernels care about.
    """
    return (h32 * bound) >> 32


def pair_from_u64(h: int, n: int) -> tuple[int, int]:
    """Decode a 64-bit draw into a uniform ordered pair of distinct agents."""
    initiator = bounded(h >> 32, n)
    r = bounded(h & 0xFFFFFFFF, n - 1)
    responder = r + 1 if r >= initiator else r
    return initiator, responder


def replacement_threshold(p: float) -> tuple[bool, int]:
    """Precompute the uint64 comparison for 'replace with probability p'.

    Returns (always, threshold): replace iff always or draw < threshold.
    Split out so p = 1.0 is exact rather than off by 2^-64.
    """
    if p >= 1.0:
        return True, 0
    if p <= 0.0:
        return False, 0
    return False, int(p * 2.0**64)


@dataclass
class SubstreamRng:
    """Per-trial randomness source.

    Stateless at heart (draws are addressed by stream and counter); the
    engine addresses draws by step index.  For standalone consumers that
    just want "the next value" there is :meth:`cursor`.
    """

    seed: int

    def u64(self, stream_id: int, counter: int) -> int:
        return stream_u64(self.seed, stream_id, counter)

    def coin(self, step: int) -> int:
        return self.u64(COIN_STREAM, step) >> 63

    def order_bit(self, step: int) -> int:
        return self.u64(ORDER_STREAM, step) >> 63

    def replaced(self, step: int, always: bool, threshold: int) -> bool:
        if always:
            return True
        if threshold == 0:
            return False
        return self.u64(REPLACEMENT_STREAM, step) < threshold

    def uniform_pair(self, step: int, n: int) -> tuple[int, int]:
        return pair_from_u64(self.u64(PAIR_STREAM, step), n)

    def adversary_pair(self, step: int, n: int) -> tuple[int, int]:
        return pair_from_u64(self.u64(ADVERSARY_STREAM, step), n)

    def junta_members(self, n: int, size: int) -> frozenset[int]:
        """Uniform subset of `size` agents via a partial Fisher-Yates shuffle."""
        if not 0 <= size <= n:
            raise ValueError(f"junta size {size} out of range for n={n}")
        pool = list(range(n))
        for k in range(size):
            h = self.u64(JUNTA_STREAM, k)
            j = k + bounded(h >> 32, n - k)
            pool[k], pool[j] = pool[j], pool[k]
        return frozenset(pool[:size])

    def cursor(self, stream_id: int) -> StreamCursor:
        return StreamCursor(self, stream_id)


@dataclass
class StreamCursor:
    """Sequential view of one substream, for consumers without a step index."""

    rng: SubstreamRng
    stream_id: int
    counter: int = field(default=0)

    def next_u64(self) -> int:
        v = self.rng.u64(self.stream_id, self.counter)
        self.counter += 1
        return v

    def next_bit(self) -> int:
        return self.next_u64() >> 63
