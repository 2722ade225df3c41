"""64-bit linear congruential generator used for every seeded draw.

The constants are fixed so that ensembles and hetero-transition families are
reproducible bit-for-bit independent of numpy's RNG implementation.
"""

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg64:
    """state <- (MULTIPLIER * state + INCREMENT) mod 2**64; output is the top 53 bits in [0, 1)."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (MULTIPLIER * self.state + INCREMENT) & _MASK
        return self.state

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def sign(self) -> int:
        return 1 if self.random() < 0.5 else -1

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi)."""
        return lo + min(int(self.random() * (hi - lo)), hi - lo - 1)


def substream(seed: int, key: int) -> Lcg64:
    """Independent-looking stream for (seed, key); one warm-up step decorrelates nearby keys."""
    gen = Lcg64((int(seed) ^ ((int(key) * 0x9E3779B97F4A7C15) & _MASK)) & _MASK)
    gen.next_u64()
    return gen
