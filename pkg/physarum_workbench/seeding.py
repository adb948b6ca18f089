"""
Random stream management.

Every stochastic operation in the workbench draws from a generator built
here: numpy's Philox-4x64-10 counter-based bit generator, keyed by the
integer seed recorded in the run manifest. Alternate implementations can
reproduce the streams by naming the same algorithm and key.
"""

import numpy as np

from .errors import UsageError

GENERATOR_NAME = "numpy.random.Philox"


def make_rng(seed: int) -> np.random.Generator:
    """
    Build the generator for a seed.

    Args:
        seed: Non-negative integer seed

    Returns:
        numpy Generator driven by Philox
    """
    if seed < 0:
        raise UsageError(f"Invalid seed: {seed}. Must be non-negative")
    return np.random.Generator(np.random.Philox(int(seed)))

