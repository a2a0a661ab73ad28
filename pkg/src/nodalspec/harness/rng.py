"""Counter-based random streams keyed by (experiment, seed, parameter index).

Each stream is a Philox generator whose key is derived from the three
components, so adding parameter points or seeds never reshuffles the draws of
existing ones.
"""

import zlib

import numpy as np


def stream(experiment: str, seed: int, index: int = 0) -> np.random.Generator:
    key = np.random.SeedSequence([zlib.crc32(experiment.encode()), int(seed), int(index)])
    return np.random.Generator(np.random.Philox(key))
