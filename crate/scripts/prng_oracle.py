#!/usr/bin/env python3
"""Independent transcription of the assertion-selection PRNG (docs/prng.md).

Usage: prng_oracle.py SEED N RATE
Prints the first two SplitMix64 outputs for SEED and the ascending list of
kept assertion ids (1..N) for keep rate RATE.
"""
import math
import sys

MASK = (1 << 64) - 1


def splitmix64(seed):
    state = seed & MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def kept(seed, n, rate):
    ids = list(range(1, n + 1))
    rng = splitmix64(seed)
    for i in range(n - 1, 0, -1):
        j = next(rng) % (i + 1)
        ids[i], ids[j] = ids[j], ids[i]
    k = math.floor(rate * n + 0.5)
    return sorted(ids[:k])


if __name__ == "__main__":
    seed, n, rate = int(sys.argv[1]), int(sys.argv[2]), float(sys.argv[3])
    g = splitmix64(seed)
    print(hex(next(g)), hex(next(g)))
    print(kept(seed, n, rate))
