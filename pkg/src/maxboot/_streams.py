"""Derived random streams.

Every stochastic operation in the package takes an integer seed and pulls its
randomness from a stream derived via ``SeedSequence(seed, spawn_key=path)``.
The path starts with a stream tag naming the consumer, optionally followed by
replicate or chunk indices. Two consequences:

* calls with the same (seed, path) are bit-reproducible,
* distinct consumers never share a stream even under one master seed, so
  experiment output does not depend on scheduling or worker count.
"""
from __future__ import annotations

import numpy as np

# Stream tags. Keep these stable: changing a tag changes every downstream draw.
SAMPLE_NOISE = 1        # generate_sample
MULTIPLIER = 2          # bootstrap multipliers (full-matrix and count form)
GAUSS_COUNTERPART = 3   # gaussian_max_draws
TRIAL_UNIFORMS = 4      # multinomial categorical trials
GP_PATHS = 5            # Gaussian process path noise
SIM_DATA = 6            # per-simulation data seeds inside experiments
SIM_BOOT = 7            # per-simulation bootstrap seeds inside experiments
REF_POP = 8             # rate-study reference population chunks
OUTER_DATA = 9          # rate-study outer-replicate datasets
OUTER_BOOT = 10         # rate-study outer-replicate bootstrap draws
RATE_LEVEL = 11         # per-sample-size derivation in rate studies


def check_seed(seed: int) -> int:
    """Validate a user-supplied seed (any nonnegative integer)."""
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return int(seed)


def seed_seq(seed: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(x) for x in path))


def stream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, path)."""
    return np.random.default_rng(seed_seq(seed, *path))


def derive_seed(seed: int, *path: int) -> int:
    """Fold (seed, path) into a fresh integer seed for a nested consumer."""
    return int(seed_seq(seed, *path).generate_state(2, dtype=np.uint64)[0])
