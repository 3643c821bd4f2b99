"""Counter-based noise for path ensembles.

The driving Brownian increments are produced by the Philox4x32-10 block
cipher keyed by the run seed, with the counter laid out as

    (attempt_index, trajectory_index, block, 0)

so that every (seed, trajectory, attempt) triple maps to a fixed pair of
128-bit blocks regardless of batch composition, worker count or evaluation
order.  A trajectory therefore consumes an identical noise sequence whether
it is stepped alone or inside an ensemble, which is what makes reports
byte-identical across worker partitions.

The generator is implemented directly on vectorised uint64 lanes (each lane
holds one 32-bit word) rather than through a library generator object, since
the whole point is a pure counter-to-sample function with no hidden state.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_TWO_POW_NEG52 = 2.0**-52


def philox4x32(counter: np.ndarray, key: np.ndarray) -> np.ndarray:
    """Ten-round Philox4x32. ``counter`` is (..., 4) and ``key`` (..., 2),
    both holding 32-bit words in uint64 storage; returns (..., 4) words."""
    c = np.asarray(counter, dtype=np.uint64)
    k = np.asarray(key, dtype=np.uint64)
    x0 = c[..., 0] & _MASK32
    x1 = c[..., 1] & _MASK32
    x2 = c[..., 2] & _MASK32
    x3 = c[..., 3] & _MASK32
    k0 = k[..., 0] & _MASK32
    k1 = k[..., 1] & _MASK32
    for _ in range(10):
        p0 = _M0 * x0
        p1 = _M1 * x2
        hi0 = p0 >> _SHIFT32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SHIFT32
        lo1 = p1 & _MASK32
        x0, x1, x2, x3 = hi1 ^ x1 ^ k0, lo1, hi0 ^ x3 ^ k1, lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return np.stack([x0, x1, x2, x3], axis=-1)


def _key_from_seed(seed: int, shape: tuple) -> np.ndarray:
    s = int(seed) & 0xFFFFFFFFFFFFFFFF
    key = np.empty(shape + (2,), dtype=np.uint64)
    key[..., 0] = s & 0xFFFFFFFF
    key[..., 1] = (s >> 32) & 0xFFFFFFFF
    return key


def uniform_open01(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """Map two 32-bit words to a double in the open interval (0, 1).

    Uses 52 payload bits so that adding the half-unit offset is exact in
    float64; the result can never round to 0.0 or 1.0.
    """
    v = (hi << _SHIFT32) | lo
    return ((v >> np.uint64(12)).astype(np.float64) + 0.5) * _TWO_POW_NEG52


def _block_words(seed: int, traj: np.ndarray, attempt: np.ndarray, block: int) -> np.ndarray:
    traj = np.asarray(traj, dtype=np.uint64)
    attempt = np.asarray(attempt, dtype=np.uint64)
    traj, attempt = np.broadcast_arrays(traj, attempt)
    counter = np.empty(traj.shape + (4,), dtype=np.uint64)
    counter[..., 0] = attempt & _MASK32
    counter[..., 1] = traj & _MASK32
    counter[..., 2] = np.uint64(block)
    counter[..., 3] = np.uint64(0)
    return philox4x32(counter, _key_from_seed(seed, traj.shape))


def standard_normals3(seed: int, traj, attempt) -> np.ndarray:
    """Three independent N(0, 1) draws for each (trajectory, attempt) pair.

    Box-Muller on Philox output; two cipher blocks yield four normals, the
    fourth is discarded.  Shapes of ``traj`` and ``attempt`` broadcast; the
    result gains a trailing axis of length 3.
    """
    w0 = _block_words(seed, traj, attempt, 0)
    w1 = _block_words(seed, traj, attempt, 1)
    u1 = uniform_open01(w0[..., 0], w0[..., 1])
    u2 = uniform_open01(w0[..., 2], w0[..., 3])
    u3 = uniform_open01(w1[..., 0], w1[..., 1])
    u4 = uniform_open01(w1[..., 2], w1[..., 3])
    r1 = np.sqrt(-2.0 * np.log(u1))
    r2 = np.sqrt(-2.0 * np.log(u3))
    z0 = r1 * np.cos(2.0 * np.pi * u2)
    z1 = r1 * np.sin(2.0 * np.pi * u2)
    z2 = r2 * np.cos(2.0 * np.pi * u4)
    return np.stack([z0, z1, z2], axis=-1)


def noise_increment(seed: int, traj, attempt, ds) -> np.ndarray:
    """Brownian increment over a step of size ds: sqrt(ds) times three
    standard normals, addressed purely by (seed, trajectory, attempt)."""
    z = standard_normals3(seed, traj, attempt)
    return np.sqrt(np.asarray(ds, dtype=float))[..., None] * z if np.ndim(ds) else np.sqrt(
        float(ds)
    ) * z
