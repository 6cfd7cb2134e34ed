"""Seeded randomness utilities shared by every stochastic operation.

All sampling in the package flows through integer seeds and the helpers
here, so that any artifact can be regenerated bit-for-bit from its recorded
seed.  Two conventions are fixed on purpose:

* Streams are PCG64 generators keyed by ``(seed, *key)`` through
  ``numpy.random.SeedSequence`` spawn keys.  Derived streams (one per
  replication, per scenario, ...) are therefore independent of execution
  order, which is what makes parallel and serial runs byte-identical.
* Gaussian variates are produced by the inverse-CDF transform applied to
  the uniform stream (``ndtri``), not by the generator's native normal
  method.  The transform is fixed so that seeded datasets reproduce across
  platforms and numpy versions.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = ["generator", "standard_normal", "bernoulli"]


def generator(seed: int, *key: int) -> np.random.Generator:
    """Return the PCG64 stream for ``seed`` refined by an optional spawn key."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def standard_normal(gen: np.random.Generator, size) -> np.ndarray:
    """Standard normal draws via the inverse CDF of the uniform stream.

    Uniform draws of exactly 0.0 (probability ~2^-53 each) are nudged to a
    tiny positive value so the transform never emits -inf.
    """
    u = gen.random(size)
    u = np.maximum(u, 1e-300)
    return ndtri(u)


def bernoulli(gen: np.random.Generator, p) -> np.ndarray:
    """Bernoulli(p) draws as 0.0/1.0 floats; ``p`` may be scalar or array."""
    p = np.asarray(p, dtype=float)
    return (gen.random(p.shape if p.shape else None) < p).astype(float)
