"""Colored complex noise with the exponential bath kernel.

The bath memory function alpha(t, s) = exp(-gamma |t - s|) / 2 is realized
by a stationary complex Ornstein-Uhlenbeck process via its exact
discretization: no step-size error in the path statistics, only in how a
consumer interpolates between samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import TimeGrid
from .params import ValidationError

# stationary variance M[|z|^2] of the process, fixed by the kernel's 1/2
KERNEL_AMPLITUDE = 0.5

_U64 = np.uint64((1 << 64) - 1)


def _philox(seed) -> tuple[np.random.Generator, tuple[int, int]]:
    """Counter-based generator keyed by (master_seed, stream).

    `seed` may be an int (stream 0) or a (master_seed, stream) pair; the
    pair is the documented parallel-trajectory contract: trajectory i uses
    stream i of the shared master seed.
    """
    if isinstance(seed, (tuple, list)):
        if len(seed) != 2:
            raise ValidationError([f"seed tuple {seed!r} must be (master, stream)"])
        master, stream = int(seed[0]), int(seed[1])
    else:
        master, stream = int(seed), 0
    if master < 0 or stream < 0:
        raise ValidationError(["seed components must be non-negative"])
    key = np.array([master, stream], dtype=np.uint64) & _U64
    return np.random.Generator(np.random.Philox(key=key)), (master, stream)


@dataclass(frozen=True)
class NoisePath:
    """Conjugated noise samples z*_j(t_n) for each bath on a uniform grid."""

    grid: TimeGrid
    samples: np.ndarray  # (n_baths, grid.n) complex
    gamma: float
    seed: tuple[int, int]

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 2 or s.shape[1] != self.grid.n:
            raise ValidationError(
                [f"samples shape {s.shape} inconsistent with grid n={self.grid.n}"])
        object.__setattr__(self, "samples", s)


def ou_noise_path(gamma: float, grid: TimeGrid, seed, n_baths: int = 2) -> NoisePath:
    """Exact-discretization stationary complex OU path per bath.

    z_0 ~ CN(0, 1/2); z_{n+1} = z_n e^{-gamma dt} + w_n with
    w_n ~ CN(0, (1/2)(1 - e^{-2 gamma dt})), giving the stationary
    covariance M[z_t conj(z_s)] = exp(-gamma |t-s|)/2 and M[z_t z_s] = 0.

    CN(0, s) here means independent real/imaginary parts of variance s/2
    each.  The same fixed seed always returns bit-identical samples.
    """
    if gamma <= 0.0:
        raise ValidationError([f"gamma={gamma} must be positive"])
    if n_baths < 1:
        raise ValidationError([f"n_baths={n_baths} must be >= 1"])
    rng, seed_rec = _philox(seed)
    n = grid.n
    w = rng.standard_normal((n_baths, n, 2))
    zs = np.empty((n_baths, n), dtype=complex)
    s0 = KERNEL_AMPLITUDE
    zs[:, 0] = np.sqrt(s0 / 2.0) * (w[:, 0, 0] + 1j * w[:, 0, 1])
    if n > 1:
        decay = np.exp(-gamma * grid.dt)
        sw = np.sqrt(s0 * (1.0 - decay * decay) / 2.0)
        incr = sw * (w[:, 1:, 0] + 1j * w[:, 1:, 1])
        # blocked exact recursion: within a block write z_k as
        # decay^k (z_block0 + sum_j decay^{-j} w_j); block length capped so
        # the decay^{-j} factors stay below exp(300)
        block = max(1, min(256, int(300.0 / max(gamma * grid.dt, 1e-9))))
        z_prev = zs[:, 0]
        for start in range(1, n, block):
            stop = min(start + block, n)
            m = stop - start
            powers = decay ** np.arange(1, m + 1)
            scaled = incr[:, start - 1:stop - 1] / powers
            zs[:, start:stop] = powers * (z_prev[:, None] + np.cumsum(scaled, axis=1))
            z_prev = zs[:, stop - 1]
    return NoisePath(grid=grid, samples=zs, gamma=gamma, seed=seed_rec)
