"""Small shared helpers."""

import os

import numpy as np

__all__ = ["default_rng"]


def default_rng(seed=0):
    """RNG for sampling-based checks; LAYERCON_SEED overrides the seed."""
    env = os.environ.get("LAYERCON_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise ValueError(f"LAYERCON_SEED must be an integer, got {env!r}") from None
    return np.random.default_rng(seed)
