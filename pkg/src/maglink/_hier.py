"""Hierarchy-of-pure-states integration kernel.

Linear (unnormalized) stochastic hierarchy for two independent baths with
exponential memory, each coupled to one cavity through a lowering operator
amp * a_j.  Auxiliary states are indexed by occupation pairs (k1, k2) up to
`depth` per bath.  The level-0 state is the physical stochastic
wavefunction.

Equation of motion per level, with M = -i H embedded in the 7-dim space
(component 0 = vacuum, 1..6 = single-excitation amplitudes; the vacuum row
and column of M are zero), damping -(k1+k2) gamma, kernel weight
alpha(0) = 1/2, and noise samples z_j(t):

    dY[m]   = M Y[m] - (k1+k2) gamma Y[m]
    dY[m,0] += amp * (z_1 Y[m,1] + z_2 Y[m,4])
    dY[m,0] += amp/2 * (k1 Y[m-e1, 1] + k2 Y[m-e2, 4])
    dY[m,1] -= amp * Y[m+e1, 0]
    dY[m,4] -= amp * Y[m+e2, 0]          (components 1, 4 = the cavities)

Because the ladder operators only connect sector components to the vacuum
component and M never mixes them, most levels of the square (k1, k2) grid
stay exactly zero for any given initial occupancy pattern.  `level_tables`
computes the reachable set (a fixed point of the source rules above) and
the kernels integrate only those levels; dropped levels would contribute
exact zeros, so results are bit-for-bit those of the full grid.

Time stepping is classical fixed-step 4th order with noise sampled on the
half-step grid so the two midpoint stages share one sample.

Two interchangeable implementations: a vectorized numpy one (always
available) and a compiled one (module `_hier_cy`, built optionally).  Both
produce the same trajectories up to floating-point reassociation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

_IDX_C1 = 1
_IDX_C2 = 4


@dataclass(frozen=True)
class LevelTables:
    """Compressed active-level indexing for one truncation depth.

    `lo1/lo2/up1/up2` give, per active level, the compressed index of the
    (k1-1), (k2-1), (k1+1), (k2+1) neighbor, or -1 when that neighbor is
    truncated away or provably zero.
    """

    depth: int
    k1: np.ndarray   # (nact,) int32 occupation of bath 1
    k2: np.ndarray   # (nact,) int32
    lo1: np.ndarray  # (nact,) int32
    lo2: np.ndarray
    up1: np.ndarray
    up2: np.ndarray

    @property
    def nact(self) -> int:
        return self.k1.size


def level_tables(depth: int, has_vacuum: bool, has_sector: bool) -> LevelTables:
    """Reachable hierarchy levels for an initial component pattern.

    Propagation rules per level (vac = component 0, sec = components 1-6):
    its sector is sourced by its own sector and the vacuum of each upper
    neighbor; its vacuum by its own components and the sector of each
    lower neighbor.  Iterating to a fixed point overapproximates every
    component that can become nonzero.
    """
    d1 = depth + 1
    nlev = d1 * d1
    hv = np.zeros(nlev, dtype=bool)
    hs = np.zeros(nlev, dtype=bool)
    hv[0] = bool(has_vacuum)
    hs[0] = bool(has_sector)
    changed = True
    while changed:
        changed = False
        for m in range(nlev):
            k1, k2 = divmod(m, d1)
            sec = hs[m] or (k1 < depth and hv[m + d1]) or (k2 < depth and hv[m + 1])
            vac = (hv[m] or hs[m] or (k1 > 0 and hs[m - d1])
                   or (k2 > 0 and hs[m - 1]))
            if sec and not hs[m]:
                hs[m] = True
                changed = True
            if vac and not hv[m]:
                hv[m] = True
                changed = True
    act = np.nonzero(hv | hs)[0]
    if act.size == 0 or act[0] != 0:
        act = np.concatenate([[0], act]).astype(act.dtype)
    pos = -np.ones(nlev, dtype=np.int32)
    pos[act] = np.arange(act.size, dtype=np.int32)
    k1 = (act // d1).astype(np.int32)
    k2 = (act % d1).astype(np.int32)

    def nb(delta):
        res = np.empty(act.size, dtype=np.int32)
        for i, m in enumerate(act):
            t = m + delta
            ok = 0 <= t < nlev
            if delta == d1:
                ok = ok and k1[i] < depth
            elif delta == -d1:
                ok = ok and k1[i] > 0
            elif delta == 1:
                ok = ok and k2[i] < depth
            else:
                ok = ok and k2[i] > 0
            res[i] = pos[t] if ok else -1
        return res

    return LevelTables(depth=depth, k1=k1, k2=k2, lo1=nb(-d1), lo2=nb(-1),
                       up1=nb(d1), up2=nb(1))


def _check_embedding(M: np.ndarray) -> None:
    if M.shape != (7, 7):
        raise ValueError(f"generator shape {M.shape} != (7, 7)")
    if np.any(M[0, :] != 0) or np.any(M[:, 0] != 0):
        raise ValueError("generator must leave the vacuum row/column zero")


def _rhs_numpy(Y, G, M, amp, gamma, z, tab: LevelTables):
    """G <- hierarchy right-hand side; Y, G are (B, nact, 7)."""
    np.matmul(Y, M.T, out=G)
    G -= (gamma * (tab.k1 + tab.k2))[None, :, None] * Y
    # noise drive into the vacuum component of every level
    G[:, :, 0] += amp * (z[:, 0, None] * Y[:, :, _IDX_C1]
                         + z[:, 1, None] * Y[:, :, _IDX_C2])
    lo1 = np.nonzero(tab.lo1 >= 0)[0]
    if lo1.size:
        G[:, lo1, 0] += (0.5 * amp) * tab.k1[lo1] * Y[:, tab.lo1[lo1], _IDX_C1]
    lo2 = np.nonzero(tab.lo2 >= 0)[0]
    if lo2.size:
        G[:, lo2, 0] += (0.5 * amp) * tab.k2[lo2] * Y[:, tab.lo2[lo2], _IDX_C2]
    up1 = np.nonzero(tab.up1 >= 0)[0]
    if up1.size:
        G[:, up1, _IDX_C1] -= amp * Y[:, tab.up1[up1], 0]
    up2 = np.nonzero(tab.up2 >= 0)[0]
    if up2.size:
        G[:, up2, _IDX_C2] -= amp * Y[:, tab.up2[up2], 0]


def run_chunk_numpy(M, amp, gamma, depth, psi0, zs, dt, n_steps, stride):
    """Propagate a batch of trajectories; returns (B, n_out, 7) level-0 states.

    M       : (7, 7) complex, -i times the embedded Hamiltonian
    psi0    : (7,) complex initial physical state (shared by the batch)
    zs      : (B, 2, 2*n_steps + 1) complex noise on the half-step grid
    stride  : output decimation; must divide n_steps
    """
    M, psi0, zs, tab = _prep(M, amp, gamma, depth, psi0, zs, n_steps, stride)
    B = zs.shape[0]
    n_out = n_steps // stride + 1
    out = np.empty((B, n_out, 7), dtype=complex)

    Y = np.zeros((B, tab.nact, 7), dtype=complex)
    Y[:, 0, :] = psi0
    K1 = np.empty_like(Y)
    K2 = np.empty_like(Y)
    K3 = np.empty_like(Y)
    K4 = np.empty_like(Y)
    Yt = np.empty_like(Y)

    out[:, 0] = Y[:, 0]
    half = 0.5 * dt
    for n in range(n_steps):
        za = zs[:, :, 2 * n]
        zm = zs[:, :, 2 * n + 1]
        zb = zs[:, :, 2 * n + 2]
        _rhs_numpy(Y, K1, M, amp, gamma, za, tab)
        np.multiply(K1, half, out=Yt)
        Yt += Y
        _rhs_numpy(Yt, K2, M, amp, gamma, zm, tab)
        np.multiply(K2, half, out=Yt)
        Yt += Y
        _rhs_numpy(Yt, K3, M, amp, gamma, zm, tab)
        np.multiply(K3, dt, out=Yt)
        Yt += Y
        _rhs_numpy(Yt, K4, M, amp, gamma, zb, tab)
        K2 += K3
        K2 *= 2.0
        K1 += K2
        K1 += K4
        K1 *= dt / 6.0
        Y += K1
        if (n + 1) % stride == 0:
            out[:, (n + 1) // stride] = Y[:, 0]
    return out


def _prep(M, amp, gamma, depth, psi0, zs, n_steps, stride):
    if n_steps % stride != 0:
        raise ValueError(f"stride {stride} does not divide n_steps {n_steps}")
    M = np.ascontiguousarray(M, dtype=complex)
    _check_embedding(M)
    psi0 = np.ascontiguousarray(psi0, dtype=complex)
    if psi0.shape != (7,):
        raise ValueError(f"psi0 shape {psi0.shape} != (7,)")
    zs = np.ascontiguousarray(zs, dtype=complex)
    if zs.ndim != 3 or zs.shape[1] != 2 or zs.shape[2] != 2 * n_steps + 1:
        raise ValueError(
            f"noise shape {zs.shape} != (B, 2, {2 * n_steps + 1})")
    tab = level_tables(depth, has_vacuum=psi0[0] != 0,
                       has_sector=bool(np.any(psi0[1:] != 0)))
    return M, psi0, zs, tab


def _load_compiled():
    try:
        from . import _hier_cy
    except ImportError:
        return None
    return _hier_cy


def available_backends() -> tuple[str, ...]:
    return ("cython", "numpy") if _load_compiled() is not None else ("numpy",)


def select_backend(name: str | None = None) -> str:
    """Resolve the kernel backend: explicit arg, then MAGLINK_BACKEND, then
    the compiled module when present, else numpy."""
    choice = name or os.environ.get("MAGLINK_BACKEND", "").strip().lower() or None
    if choice is None:
        return "cython" if _load_compiled() is not None else "numpy"
    if choice not in ("cython", "numpy"):
        raise ValueError(f"unknown backend {choice!r}; use 'cython' or 'numpy'")
    if choice == "cython" and _load_compiled() is None:
        raise ValueError("compiled backend requested but _hier_cy is not built")
    return choice


def run_chunk(M, amp, gamma, depth, psi0, zs, dt, n_steps, stride,
              backend: str | None = None):
    """Backend-dispatching wrapper around the chunk propagator."""
    chosen = select_backend(backend)
    if chosen == "cython":
        mod = _load_compiled()
        M, psi0, zs, tab = _prep(M, amp, gamma, depth, psi0, zs, n_steps,
                                 stride)
        mi, mj = np.nonzero(M)
        return mod.run_chunk_cy(
            M[mi, mj], mi.astype(np.int32), mj.astype(np.int32),
            float(amp), float(gamma), psi0, zs, float(dt), int(n_steps),
            int(stride), tab.k1, tab.k2, tab.lo1, tab.lo2, tab.up1, tab.up2)
    return run_chunk_numpy(M, amp, gamma, depth, psi0, zs, dt, n_steps, stride)
