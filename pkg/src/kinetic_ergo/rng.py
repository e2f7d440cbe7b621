"""Counter-based reproducible random streams.

All Monte Carlo in the library draws from Philox streams keyed by
(seed, stream labels...).  Philox is counter-based, so streams with
distinct keys are independent and a given key always reproduces the same
numbers regardless of how many other streams were consumed -- this is what
makes synchronous couplings and parallel ensembles bit-reproducible.

Per-step noise for integrators is drawn as one block per (seed, step) key;
a trajectory's increment is a fixed row of that block, so the increment
seen by trajectory i at step k depends only on (seed, i, k).
"""
import numpy as np

_STEP_STREAM = 0x9E3779B97F4A7C15  # domain separators for the key space
_GENERIC_STREAM = 0xC2B2AE3D27D4EB4F


_MASK = 0xFFFFFFFFFFFFFFFF


def _splitmix(x):
    # 64-bit finalizer; bijective, so distinct inputs stay distinct
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def _key(seed, sep, labels):
    """Fold (seed, separator, labels...) into the 128-bit Philox key."""
    k0 = _splitmix((int(seed) & _MASK) ^ sep)
    k1 = _splitmix(k0 ^ 0xD6E8FEB86659FD93)
    for label in labels:
        k0 = _splitmix(k0 ^ (int(label) & _MASK))
        k1 = _splitmix(k1 ^ _splitmix(int(label) & _MASK))
    return (np.uint64(k0), np.uint64(k1))


def substream(seed, *labels):
    """A generator for the Philox stream keyed by ``(seed, *labels)``."""
    return np.random.Generator(np.random.Philox(key=_key(seed, _GENERIC_STREAM, labels)))


def step_normals(seed, step, shape):
    """Standard normal block for integrator step ``step``.

    Deterministic in (seed, step, shape); used by every integration backend
    so that coupled copies and particle systems can share increments
    bit-exactly.
    """
    gen = np.random.Generator(np.random.Philox(key=_key(seed, _STEP_STREAM, (step,))))
    return gen.standard_normal(shape)
