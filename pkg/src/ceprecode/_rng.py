"""Seeded random streams.

Every random quantity in the package comes from a PCG64 generator seeded
through :class:`numpy.random.SeedSequence`. Monte Carlo trials never share a
generator: trial ``i`` of purpose ``tag`` under master seed ``s`` uses the
stream ``SeedSequence(s, spawn_key=(tag, i))``. The result of a trial is
therefore a function of ``(s, tag, i)`` alone, whatever the worker count.

Complex Gaussian samples are produced from uniforms with the polar form of
the Box-Muller transform. Each complex entry consumes two consecutive
uniforms ``(u1, u2)`` in row-major order::

    z = sqrt(-log(1 - u1)) * exp(2j * pi * u2)

which is circularly-symmetric with ``E|z|^2 = 1``.
"""

import numpy as np

# Stream purposes. Values are part of the reproducibility contract.
CHANNEL = 1
SYMBOLS = 2
NOISE = 3
PHASES = 4

_MASK64 = (1 << 64) - 1


def make_generator(seed):
    """PCG64 generator for a plain integer seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & _MASK64)))


def trial_seed(master_seed, tag, index):
    """Derive the 64-bit seed of trial ``index`` for stream purpose ``tag``."""
    ss = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=(int(tag), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def complex_normal(rng, shape):
    """Unit-variance CN(0, 1) samples via Box-Muller."""
    shape = tuple(np.atleast_1d(shape)) if not isinstance(shape, tuple) else shape
    count = int(np.prod(shape, dtype=np.int64))
    u = rng.random(2 * count).reshape(count, 2)
    radius = np.sqrt(-np.log1p(-u[:, 0]))
    angle = 2.0 * np.pi * u[:, 1]
    z = radius * np.cos(angle) + 1j * (radius * np.sin(angle))
    return z.reshape(shape)


def uniform_phases(rng, shape):
    """Phases drawn uniformly from [-pi, pi)."""
    return -np.pi + 2.0 * np.pi * rng.random(shape)
