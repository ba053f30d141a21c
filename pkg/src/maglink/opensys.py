"""Cavity damping through non-Markovian baths with exponential memory.

Each cavity couples to its own bath with memory kernel
alpha(t, s) = exp(-gamma |t - s|) / 2 through a lowering operator
amp * a_cavity.  Three routes to the reduced density matrix:

* stochastic hierarchy ensemble (`qsd_ensemble`), the production method;
* an exact auxiliary-mode solve (`pseudomode_solve`), possible for this
  kernel because one damped mode per bath reproduces it exactly;
* a memoryless reference (`lindblad_solve`) with the rate-matched damping
  amp^2 / gamma, which the other two approach as gamma grows.

All density matrices live in the 7-dim space (index 0 = vacuum, 1..6 =
single-excitation amplitudes in mode order c1, m1, q1, c2, m2, q2).
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._hier import run_chunk, select_backend
from .hilbert import (Frame, Mode, PureState, StateTrajectory, TimeGrid,
                      build_hamiltonian, initial_state)
from .noise import KERNEL_AMPLITUDE, NoisePath, ou_noise_path
from .params import SystemParams, ValidationError

STEP_SAFETY = 20.0  # integration step keeps every rate below 1/(20 dt)

_CAV = (Mode.C1, Mode.C2)


class LConvention(enum.Enum):
    """How the cavity coupling rate enters the bath operator amp * a_j."""

    LITERAL = "gamma_c"        # amp = Gamma_c
    SQRT = "sqrt_gamma_c"      # amp = sqrt(Gamma_c)


class ConvergenceError(RuntimeError):
    """Hierarchy depth check failed to meet its tolerance."""


@dataclass(frozen=True)
class BathConfig:
    """One bath per cavity, identical parameters for both."""

    gamma: float                 # memory decay rate of the kernel
    coupling_rate: float         # Gamma_c, the cavity damping scale
    convention: LConvention = LConvention.LITERAL

    def __post_init__(self):
        problems = []
        if not self.gamma > 0.0:
            problems.append(f"gamma={self.gamma} must be positive")
        if self.coupling_rate < 0.0:
            problems.append(f"coupling_rate={self.coupling_rate} must be >= 0")
        if problems:
            raise ValidationError(problems)

    @property
    def amp(self) -> float:
        if self.convention is LConvention.SQRT:
            return math.sqrt(self.coupling_rate)
        return self.coupling_rate


def matched_markov_rate(bath: BathConfig) -> float:
    """Lindblad damping rate with the same zero-frequency bath weight.

    2 * amp^2 * integral_0^inf alpha(tau) dtau = amp^2 / gamma.
    """
    return bath.amp ** 2 / bath.gamma


@dataclass(frozen=True)
class DensityTrajectory:
    """Reduced density matrices over a uniform time grid.

    `se` is an entrywise standard-error magnitude (ensemble kind only).
    """

    grid: TimeGrid
    rho: np.ndarray               # (n, 7, 7) complex
    kind: str                     # 'pseudomode' | 'lindblad' | 'ensemble'
    se: np.ndarray | None = None  # (n, 7, 7) real, ensemble only
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=complex)
        if r.shape != (self.grid.n, 7, 7):
            raise ValidationError(
                [f"rho shape {r.shape} != ({self.grid.n}, 7, 7)"])
        herm = float(np.max(np.abs(r - r.conj().transpose(0, 2, 1))))
        if herm > 1e-10 * max(1.0, float(np.max(np.abs(r)))):
            raise ValidationError([f"density not Hermitian: deviation {herm}"])
        traces = np.trace(r, axis1=1, axis2=2).real
        tr_tol = 0.1 if self.kind == "ensemble" else 1e-8
        worst = float(np.max(np.abs(traces - 1.0)))
        if worst > tr_tol:
            raise ValidationError([f"trace deviates from one by {worst}"])
        object.__setattr__(self, "rho", r)
        if self.se is not None:
            s = np.asarray(self.se, dtype=float)
            if s.shape != r.shape:
                raise ValidationError([f"se shape {s.shape} != rho shape"])
            object.__setattr__(self, "se", s)

    def psd_tolerance(self) -> float:
        if self.kind == "ensemble" and self.se is not None:
            return max(1e-10, 8.0 * float(np.max(self.se)))
        return 1e-10


def _embedded_generator(params: SystemParams, frame: Frame) -> np.ndarray:
    """-i H in the 7-dim space; the vacuum row and column stay zero."""
    H = build_hamiltonian(params, frame).matrix
    M = np.zeros((7, 7), dtype=complex)
    M[1:, 1:] = -1j * H
    return M


def _state7(psi0: PureState | None) -> np.ndarray:
    if psi0 is None:
        psi0 = initial_state(Mode.Q1)
    v = np.zeros(7, dtype=complex)
    v[0] = 0.0 if psi0.vacuum is None else psi0.vacuum
    v[1:] = psi0.amplitudes
    return v


def integration_step(params: SystemParams, bath: BathConfig, depth: int,
                     frame: Frame = Frame.ROTATING_AT_OMEGA_Q) -> float:
    """Largest allowed fixed step: all rates resolved by STEP_SAFETY points.

    Rates considered: Hamiltonian spectral radius, the kernel decay gamma,
    the fastest hierarchy damping 2*depth*gamma, the bare coupling scale,
    and the matched Markov rate.
    """
    H = build_hamiltonian(params, frame).matrix
    spec_rad = float(np.max(np.abs(np.linalg.eigvalsh(H))))
    rates = [spec_rad, bath.gamma, 2.0 * depth * bath.gamma,
             bath.coupling_rate, bath.amp, matched_markov_rate(bath)]
    return 1.0 / (STEP_SAFETY * max(rates))


def _plan_grid(t_end: float, dt_max: float, output_points: int):
    """Step count rounded so the output grid decimates it evenly."""
    if output_points < 2:
        raise ValidationError([f"output_points={output_points} must be >= 2"])
    if not t_end > 0.0:
        raise ValidationError([f"t_end={t_end} must be positive"])
    segments = output_points - 1
    n_steps = max(segments, int(math.ceil(t_end / dt_max)))
    stride = int(math.ceil(n_steps / segments))
    n_steps = stride * segments
    return t_end / n_steps, n_steps, stride


def qsd_trajectory(params: SystemParams, bath: BathConfig, noise: NoisePath,
                   psi0: PureState | None = None, depth: int = 4,
                   frame: Frame = Frame.ROTATING_AT_OMEGA_Q,
                   backend: str | None = None) -> StateTrajectory:
    """One linear stochastic trajectory driven by a prepared noise path.

    The noise grid must hold half-step samples: an odd number of points
    2*n_steps + 1 whose spacing is half the integration step, and that
    step must satisfy the `integration_step` bound.
    """
    if noise.gamma != bath.gamma:
        raise ValidationError(
            [f"noise gamma {noise.gamma} != bath gamma {bath.gamma}"])
    if noise.grid.n < 3 or noise.grid.n % 2 == 0:
        raise ValidationError(
            [f"noise grid n={noise.grid.n} must be odd and >= 3"])
    n_steps = (noise.grid.n - 1) // 2
    dt = 2.0 * noise.grid.dt
    dt_max = integration_step(params, bath, depth, frame)
    if dt > dt_max * (1.0 + 1e-9):
        raise ValidationError(
            [f"integration step {dt} exceeds the stability bound {dt_max}"])
    M = _embedded_generator(params, frame)
    v0 = _state7(psi0)
    zs = noise.samples[None, :, :]
    Y = run_chunk(M, bath.amp, bath.gamma, depth, v0, zs, dt, n_steps, 1,
                  backend=backend)[0]
    grid = TimeGrid(t0=noise.grid.t0, dt=dt, n=n_steps + 1)
    times = grid.times()
    states = tuple(
        PureState(amplitudes=Y[k, 1:], time=times[k], vacuum=complex(Y[k, 0]))
        for k in range(n_steps + 1))
    meta = {"seed": noise.seed, "depth": depth, "convention": bath.convention.value}
    return StateTrajectory(grid=grid, states=states, meta=meta)


def _taylor_expm(A: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring matrix exponential (series core).

    Fallback for defective effective Hamiltonians where the eigenvector
    route is unreliable; sizes here are at most 8x8.
    """
    norm = float(np.linalg.norm(A, 1))
    s = max(0, int(math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0)
    T = A / (2 ** s)
    E = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, 40):
        term = term @ T / k
        E = E + term
        if float(np.max(np.abs(term))) < 1e-20:
            break
    for _ in range(s):
        E = E @ E
    return E


def _nonherm_amplitudes(A: np.ndarray, v0: np.ndarray,
                        times: np.ndarray) -> np.ndarray:
    """Rows of exp(A t) v0 over `times`; eig fast path, expm fallback."""
    lam, V = np.linalg.eig(A)
    use_eig = True
    try:
        c = np.linalg.solve(V, v0)
        recon = V @ np.diag(lam) @ np.linalg.inv(V)
        scale = max(1.0, float(np.max(np.abs(A))))
        use_eig = float(np.max(np.abs(recon - A))) <= 1e-9 * scale
    except np.linalg.LinAlgError:
        use_eig = False
    if use_eig:
        phases = np.exp(np.outer(times, lam))
        return phases * c[None, :] @ V.T
    dts = np.diff(times)
    if dts.size and float(np.ptp(dts)) > 1e-12 * float(np.max(np.abs(dts))):
        raise ValidationError(["expm fallback needs a uniform time grid"])
    out = np.empty((times.size, v0.size), dtype=complex)
    out[0] = _taylor_expm(A * times[0]) @ v0 if times[0] != 0.0 else v0
    if times.size > 1:
        E = _taylor_expm(A * dts[0])
        for k in range(1, times.size):
            out[k] = E @ out[k - 1]
    return out


def _assemble_rho7(system_amps: np.ndarray, vac0: complex) -> np.ndarray:
    """Density matrices from decaying sector amplitudes.

    Excitations lost to the baths pile up incoherently in the vacuum, so
    rho[0,0] tops the trace up to one; the coherent vacuum amplitude from
    the initial state keeps its cross terms with the sector.
    """
    n = system_amps.shape[0]
    rho = np.zeros((n, 7, 7), dtype=complex)
    rho[:, 1:, 1:] = system_amps[:, :, None] * system_amps.conj()[:, None, :]
    rho[:, 1:, 0] = system_amps * np.conj(vac0)
    rho[:, 0, 1:] = rho[:, 1:, 0].conj()
    sector = np.sum(np.abs(system_amps) ** 2, axis=1)
    rho[:, 0, 0] = 1.0 - sector
    return rho


def pseudomode_solve(params: SystemParams, bath: BathConfig, grid: TimeGrid,
                     psi0: PureState | None = None,
                     frame: Frame = Frame.ROTATING_AT_OMEGA_Q) -> DensityTrajectory:
    """Exact reduced dynamics via one auxiliary mode per bath.

    The exponential kernel is reproduced exactly by a resonant auxiliary
    mode with amplitude decay gamma (population decay 2 gamma), coupled to
    the bath operator's cavity at strength amp * sqrt(1/2).
    """
    H = build_hamiltonian(params, frame).matrix
    g_aux = bath.amp * math.sqrt(KERNEL_AMPLITUDE)
    A8 = np.zeros((8, 8), dtype=complex)
    A8[:6, :6] = H
    for j, cav in enumerate(_CAV):
        a = 6 + j
        A8[a, a] = -1j * bath.gamma
        A8[int(cav), a] = g_aux
        A8[a, int(cav)] = g_aux
    v7 = _state7(psi0)
    v0 = np.zeros(8, dtype=complex)
    v0[:6] = v7[1:]
    amps = _nonherm_amplitudes(-1j * A8, v0, grid.times())
    rho = _assemble_rho7(amps[:, :6], complex(v7[0]))
    # auxiliary-mode population is part of the lost excitation already
    # counted by the trace top-up, so tracing it out is just dropping it.
    # It is still reported: sector norm alone can revive when the memory
    # feeds excitation back, but sector + auxiliary only ever decays.
    meta = {"gamma": bath.gamma, "coupling_rate": bath.coupling_rate,
            "convention": bath.convention.value, "frame": frame.name,
            "aux_population": np.abs(amps[:, 6:]) ** 2}
    return DensityTrajectory(grid=grid, rho=_hermitize(rho), kind="pseudomode",
                             meta=meta)


def lindblad_solve(params: SystemParams, bath: BathConfig, grid: TimeGrid,
                   psi0: PureState | None = None,
                   frame: Frame = Frame.ROTATING_AT_OMEGA_Q) -> DensityTrajectory:
    """Memoryless reference with the matched damping rate on both cavities."""
    H = build_hamiltonian(params, frame).matrix
    rate = matched_markov_rate(bath)
    A6 = -1j * H.astype(complex)
    for cav in _CAV:
        A6[int(cav), int(cav)] -= 0.5 * rate
    v7 = _state7(psi0)
    amps = _nonherm_amplitudes(A6, v7[1:], grid.times())
    rho = _assemble_rho7(amps, complex(v7[0]))
    meta = {"matched_rate": rate, "gamma": bath.gamma,
            "convention": bath.convention.value, "frame": frame.name}
    return DensityTrajectory(grid=grid, rho=_hermitize(rho), kind="lindblad",
                             meta=meta)


def _hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().transpose(0, 2, 1))


def ensemble_density(trajectories) -> DensityTrajectory:
    """Mean projector and entrywise standard error from raw trajectories."""
    if not trajectories:
        raise ValidationError(["empty trajectory list"])
    grid = trajectories[0].grid
    for t in trajectories[1:]:
        if (t.grid.n != grid.n or t.grid.t0 != grid.t0
                or abs(t.grid.dt - grid.dt) > 1e-15 * max(1.0, abs(grid.dt))):
            raise ValidationError(["trajectories disagree on the time grid"])
    n = len(trajectories)
    s1 = np.zeros((grid.n, 7, 7), dtype=complex)
    s2 = np.zeros((grid.n, 7, 7))
    for t in trajectories:
        v = np.empty((grid.n, 7), dtype=complex)
        vac = t.vacuum_array()
        v[:, 0] = 0.0 if vac is None else vac
        v[:, 1:] = t.amplitude_array()
        outer = v[:, :, None] * v.conj()[:, None, :]
        s1 += outer
        s2 += np.abs(outer) ** 2
    mean = s1 / n
    var = np.maximum(s2 / n - np.abs(mean) ** 2, 0.0)
    se = np.sqrt(var / n)
    return DensityTrajectory(grid=grid, rho=_hermitize(mean), kind="ensemble",
                             se=se, meta={"n_traj": n})


def _zero_noise_backbone(M, bath, depth, v0, dt, n_steps, stride, backend):
    zs = np.zeros((1, 2, 2 * n_steps + 1), dtype=complex)
    Y = run_chunk(M, bath.amp, bath.gamma, depth, v0, zs, dt, n_steps, stride,
                  backend=backend)[0]
    return Y[:, :, None] * Y.conj()[:, None, :]


def qsd_ensemble(params: SystemParams, bath: BathConfig, t_end: float,
                 n_traj: int, master_seed: int, depth: int = 4,
                 output_points: int = 401,
                 frame: Frame = Frame.ROTATING_AT_OMEGA_Q,
                 psi0: PureState | None = None, backend: str | None = None,
                 n_threads: int | None = None, chunk_size: int = 128,
                 check_convergence: bool = True, probe_count: int = 10,
                 convergence_tol: float = 1e-8) -> DensityTrajectory:
    """Ensemble-averaged density matrix from the stochastic hierarchy.

    Trajectory i always uses noise stream (master_seed, i), and chunk sums
    are merged in a fixed order, so results are bit-identical for a given
    backend regardless of thread count.

    The reported `se` combines the Monte Carlo error, a step-halving
    estimate of the integrator truncation error, and a machine-precision
    floor.  Entries without sampling noise would otherwise get an exactly
    zero error bar, which no finite-precision mean can honestly claim.

    Depth convergence is probed by re-running the first `probe_count`
    trajectories one level deeper on the same noise; the outcome lands in
    meta['converged'] and meta['depth_delta'] rather than raising, so
    callers can persist the result and then flag the failure.
    """
    if n_traj < 1:
        raise ValidationError([f"n_traj={n_traj} must be >= 1"])
    if depth < 1:
        raise ValidationError([f"depth={depth} must be >= 1"])
    chosen = select_backend(backend)
    dt_max = integration_step(params, bath, depth, frame)
    dt, n_steps, stride = _plan_grid(t_end, dt_max, output_points)
    M = _embedded_generator(params, frame)
    v0 = _state7(psi0)
    noise_grid = TimeGrid(t0=0.0, dt=0.5 * dt, n=2 * n_steps + 1)

    def noise_block(start: int, stop: int) -> np.ndarray:
        zs = np.empty((stop - start, 2, noise_grid.n), dtype=complex)
        for i, sid in enumerate(range(start, stop)):
            zs[i] = ou_noise_path(bath.gamma, noise_grid, (master_seed, sid)).samples
        return zs

    converged = True
    depth_delta = 0.0
    if check_convergence:
        n_probe = min(probe_count, n_traj)
        zs = noise_block(0, n_probe)
        y_lo = run_chunk(M, bath.amp, bath.gamma, depth, v0, zs, dt,
                         n_steps, stride, backend=chosen)
        y_hi = run_chunk(M, bath.amp, bath.gamma, depth + 1, v0, zs, dt,
                         n_steps, stride, backend=chosen)
        depth_delta = float(np.max(np.abs(y_hi - y_lo)))
        converged = depth_delta <= convergence_tol

    def sums_block(bounds):
        start, stop = bounds
        zs = noise_block(start, stop)
        Y = run_chunk(M, bath.amp, bath.gamma, depth, v0, zs, dt, n_steps,
                      stride, backend=chosen)
        outer = Y[:, :, :, None] * Y.conj()[:, :, None, :]
        return outer.sum(axis=0), np.sum(np.abs(outer) ** 2, axis=0)

    blocks = [(s, min(s + chunk_size, n_traj)) for s in range(0, n_traj, chunk_size)]
    workers = n_threads or min(8, os.cpu_count() or 1)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(sums_block, blocks))
    else:
        results = [sums_block(b) for b in blocks]
    n_out = n_steps // stride + 1
    s1 = np.zeros((n_out, 7, 7), dtype=complex)
    s2 = np.zeros((n_out, 7, 7))
    for a, b in results:  # fixed merge order keeps the sum deterministic
        s1 += a
        s2 += b
    mean = s1 / n_traj
    var = np.maximum(s2 / n_traj - np.abs(mean) ** 2, 0.0)
    se_mc = np.sqrt(var / n_traj)

    rho_bb = _zero_noise_backbone(M, bath, depth, v0, dt, n_steps, stride, chosen)
    rho_bb_half = _zero_noise_backbone(M, bath, depth, v0, 0.5 * dt,
                                       2 * n_steps, 2 * stride, chosen)
    se_trunc = (16.0 / 15.0) * np.abs(rho_bb_half - rho_bb)
    se_floor = 64.0 * np.finfo(float).eps
    se = np.sqrt(se_mc ** 2 + se_trunc ** 2 + se_floor ** 2)

    grid = TimeGrid(t0=0.0, dt=dt * stride, n=n_out)
    meta = {
        "master_seed": master_seed, "n_traj": n_traj, "depth": depth,
        "converged": converged, "depth_delta": depth_delta,
        "convergence_tol": convergence_tol, "backend": chosen, "dt": dt,
        "n_steps": n_steps, "stride": stride,
        "convention": bath.convention.value,
        "matched_markov_rate": matched_markov_rate(bath),
        "frame": frame.name, "se_mc_max": float(np.max(se_mc)),
        "se_trunc_max": float(np.max(se_trunc)),
    }
    return DensityTrajectory(grid=grid, rho=_hermitize(mean), kind="ensemble",
                             se=se, meta=meta)
