"""
Seeded random generators
"""
import numpy as np


def make_generator(seed: int) -> np.random.Generator:
    """
    Counter-based (Philox) generator, so a seed yields the same stream on
    every platform.
    """
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))
