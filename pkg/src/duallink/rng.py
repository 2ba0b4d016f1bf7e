"""Counter-based random streams keyed by ``(master_seed, *keys)``.

Every stream is an independent Philox generator whose key is derived from
the full tuple through :class:`numpy.random.SeedSequence`, so draws for one
realization never depend on how many others were generated before it.
"""

import numpy as np

RNG_NAME = "numpy.random.Philox"
RNG_VERSION = 1

# stream ids
CHANNELS = 0
WEIGHTS = 1
INIT = 2


def stream(master_seed, *keys):
    """Independent generator for ``(master_seed, *keys)``; all keys must be >= 0 ints."""
    entropy = [int(master_seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError("seeds and stream keys must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def complex_gaussian(rng, shape):
    """Circularly symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
