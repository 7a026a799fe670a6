"""Reproducible Haar-random 4x4 unitaries and pure two-qubit states.

Every draw is keyed by ``(master_seed, stream_index)``.  The generator is
Philox-4x64 (counter based) with the 128-bit key
``master_seed + 2**64 * stream_index`` and counter 0, so draw ``k`` does not
depend on how many other draws were made before it, or by which worker.

Gaussians come from numpy's ``Generator.standard_normal`` (ziggurat
transform of the Philox uniforms).  A Ginibre matrix takes 32 normals in
row-major order, real part first: ``G[i, j] = (n[2(4i+j)] + 1j n[2(4i+j)+1]) / sqrt(2)``.
Bit-identity is promised for a fixed numpy version, not across
implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIM = 4
U64 = 1 << 64
# |r_kk| below this counts as a singular Ginibre draw.
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not (0 <= int(v) < U64):
                raise ValueError(f"{name}={v!r} is not a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        key = int(self.master_seed) + (int(self.stream_index) << 64)
        return np.random.Generator(np.random.Philox(key=key))


def _ginibre(rng: np.random.Generator, count: int = 1) -> np.ndarray:
    n = rng.standard_normal(2 * DIM * DIM * count).reshape(count, DIM, DIM, 2)
    return (n[..., 0] + 1j * n[..., 1]) / np.sqrt(2.0)


def _qr_haar(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Phase-fixed QR of a stack of matrices.

    Each column of Q is multiplied by r_kk/|r_kk| so the equivalent R has a
    real positive diagonal; plain QR output is not Haar distributed.
    Returns (Q, |diag R|).
    """
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(d)
    safe = np.where(mag > 0, mag, 1.0)
    return q * (d / safe)[..., None, :], mag


def haar_unitary(seed: SeedSpec) -> np.ndarray:
    """Haar-distributed 4x4 unitary for ``seed``.

    A numerically singular Ginibre draw is discarded and the next one from
    the same stream is used.
    """
    rng = seed.generator()
    while True:
        q, mag = _qr_haar(_ginibre(rng)[0])
        if np.min(mag) > SINGULAR_TOL:
            return q


def random_pure_state(seed: SeedSpec) -> np.ndarray:
    """First column of :func:`haar_unitary`; uniform on the unit sphere of C^4."""
    return haar_unitary(seed)[:, 0].copy()


def random_pure_states(master_seed: int, start: int, stop: int) -> np.ndarray:
    """States for stream indices ``start..stop-1`` as an (n, 4) array.

    Row ``k - start`` is bit-identical to ``random_pure_state(SeedSpec(master_seed, k))``.
    """
    n = stop - start
    out = np.empty((n, DIM), dtype=complex)
    if n <= 0:
        return out
    gens = [SeedSpec(master_seed, k).generator() for k in range(start, stop)]
    g = np.stack([_ginibre(rng)[0] for rng in gens])
    q, mag = _qr_haar(g)
    out[:] = q[:, :, 0]
    bad = np.nonzero(np.min(mag, axis=1) <= SINGULAR_TOL)[0]
    for i in bad:
        # replay the stream so the retry matches the scalar path exactly
        out[i] = random_pure_state(SeedSpec(master_seed, start + int(i)))
    return out
