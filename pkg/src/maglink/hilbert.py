"""Single-excitation basis, Hamiltonian construction, and exact closed evolution.

The conserved-excitation sector of the six bosonic modes is spanned by the
states |c1 m1 q1, c2 m2 q2> with exactly one quantum, ordered as in
:class:`Mode`.  Closed evolution is done by eigendecomposition of the 6x6
Hamiltonian, which is exact at any time (no step error).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .params import SystemParams, ValidationError, validate_params

N_MODES = 6


class Mode(enum.IntEnum):
    """Fixed basis order for the single-excitation sector."""

    C1 = 0
    M1 = 1
    Q1 = 2
    C2 = 3
    M2 = 4
    Q2 = 5


class Frame(enum.Enum):
    """Reference frame for the Hamiltonian diagonal.

    In the frame rotating at omega_q the diagonal holds detunings relative
    to the qubit, so the fully resonant case has a zero diagonal.  The
    overall frequency offset is a global phase in this sector and does not
    affect any observable.
    """

    LAB = "lab"
    ROTATING_AT_OMEGA_Q = "rotating_at_omega_q"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t_k = t0 + k*dt for k = 0..n-1."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError([f"grid n={self.n} must be >= 1"])
        if self.n > 1 and not self.dt > 0.0:
            raise ValidationError([f"grid dt={self.dt} must be positive"])

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)

    @classmethod
    def over_window(cls, t_end: float, n: int = 2001, t0: float = 0.0) -> "TimeGrid":
        """Grid of n points covering [t0, t_end]; default 2001 points."""
        if n < 2:
            raise ValidationError([f"window grid needs n >= 2, got {n}"])
        if not t_end > t0:
            raise ValidationError([f"t_end={t_end} must exceed t0={t0}"])
        return cls(t0=t0, dt=(t_end - t0) / (n - 1), n=n)


@dataclass(frozen=True)
class HamiltonianMatrix:
    """6x6 single-excitation Hamiltonian with its frame tag.

    The matrix is Hermitian (real symmetric for this model) and has nonzero
    off-diagonals only on the (c_i, m_i), (c_i, q_i) and (c1, c2) bonds.
    """

    matrix: np.ndarray
    frame: Frame

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (N_MODES, N_MODES):
            raise ValidationError([f"Hamiltonian shape {m.shape} != (6, 6)"])
        object.__setattr__(self, "matrix", m)
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(m - m.conj().T).max()) > 1e-12 * scale:
            raise ValidationError(["Hamiltonian is not Hermitian"])


@dataclass(frozen=True)
class PureState:
    """State in the single-excitation sector, optionally with a vacuum amplitude.

    Closed dynamics uses the six sector amplitudes only; open dynamics adds
    the vacuum amplitude that collects decayed population.  Linear stochastic
    trajectories do not conserve the norm, so no normalization is enforced
    here; the operations that promise normalization assert it themselves.
    """

    amplitudes: np.ndarray
    time: float = 0.0
    vacuum: complex | None = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.shape != (N_MODES,):
            raise ValidationError([f"amplitude vector shape {a.shape} != (6,)"])
        if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
            raise ValidationError(["non-finite amplitude"])
        object.__setattr__(self, "amplitudes", a)

    def sector_norm_sq(self) -> float:
        """Total excitation population in the six-mode sector."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True)
class StateTrajectory:
    """Ordered (time, PureState) samples on a uniform grid."""

    grid: TimeGrid
    states: tuple[PureState, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.states) != self.grid.n:
            raise ValidationError(
                [f"{len(self.states)} states on a grid of n={self.grid.n}"])
        ts = self.grid.times()
        for t, s in zip(ts, self.states):
            # grid descriptor must agree with the per-state time tags
            if abs(s.time - t) > 1e-9 * max(1.0, abs(t)):
                raise ValidationError(["state times inconsistent with grid"])

    def amplitude_array(self) -> np.ndarray:
        """(n, 6) complex array of sector amplitudes."""
        return np.array([s.amplitudes for s in self.states])

    def vacuum_array(self) -> np.ndarray | None:
        if self.states[0].vacuum is None:
            return None
        return np.array([s.vacuum for s in self.states])


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hamiltonian."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def build_hamiltonian(params: SystemParams,
                      frame: Frame = Frame.ROTATING_AT_OMEGA_Q) -> HamiltonianMatrix:
    """Assemble the 6x6 single-excitation Hamiltonian.

    The diagonal carries the mode frequencies (lab frame) or the detunings
    relative to omega_q (rotating frame).  Off-diagonal couplings: g_m on
    (c_i, m_i), g_q on (c_i, q_i), J on (c1, c2).  There is no direct
    magnon-qubit coupling and no cross-cavity magnon/qubit coupling.
    """
    validate_params(params)
    h = np.zeros((N_MODES, N_MODES))
    if frame is Frame.LAB:
        diag = (params.omega_c, params.omega_m, params.omega_q)
    else:
        diag = (params.omega_c - params.omega_q,
                params.omega_m - params.omega_q,
                0.0)
    for cav in (Mode.C1, Mode.C2):
        h[cav, cav] = diag[0]
        h[cav + 1, cav + 1] = diag[1]
        h[cav + 2, cav + 2] = diag[2]
        h[cav, cav + 1] = h[cav + 1, cav] = params.g_m
        h[cav, cav + 2] = h[cav + 2, cav] = params.g_q
    h[Mode.C1, Mode.C2] = h[Mode.C2, Mode.C1] = params.J
    return HamiltonianMatrix(matrix=h, frame=frame)


def spectrum(H: HamiltonianMatrix | np.ndarray) -> Spectrum:
    """Eigendecomposition of a Hermitian Hamiltonian, eigenvalues ascending.

    Eigenvectors within degenerate subspaces are not unique; compare
    projectors, not vectors.
    """
    m = H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H, dtype=complex)
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.conj().T).max()) > 1e-12 * scale:
        raise ValidationError(["spectrum requires a Hermitian matrix"])
    evals, evecs = np.linalg.eigh(m)
    return Spectrum(eigenvalues=evals, eigenvectors=evecs)


def initial_state(excited: Mode) -> PureState:
    """Unit amplitude on one mode, e.g. Q1 for |001,000>."""
    a = np.zeros(N_MODES, dtype=complex)
    a[int(excited)] = 1.0
    return PureState(amplitudes=a, time=0.0)


def propagate(H: HamiltonianMatrix, psi0: PureState, grid: TimeGrid) -> StateTrajectory:
    """Exact closed evolution psi(t) = V exp(-i lambda (t - t0)) V^dag psi0.

    The norm is conserved to 1e-10 at every grid point (checked).  A vacuum
    amplitude, if present, is carried through unchanged: the Hamiltonian
    does not act on the vacuum.
    """
    spec = spectrum(H)
    norm0 = psi0.sector_norm_sq()
    coeff = spec.eigenvectors.conj().T @ psi0.amplitudes
    ts = grid.times()
    phases = np.exp(-1j * np.outer(spec.eigenvalues, ts - grid.t0))
    amps = spec.eigenvectors @ (phases * coeff[:, None])  # (6, n)
    states = []
    for k, t in enumerate(ts):
        a = amps[:, k]
        if abs(float(np.vdot(a, a).real) - norm0) > 1e-10 * max(1.0, norm0):
            raise ValidationError(["norm drift beyond 1e-10 in propagate"])
        states.append(PureState(amplitudes=a, time=float(t), vacuum=psi0.vacuum))
    return StateTrajectory(grid=grid, states=tuple(states))


def propagate_amplitudes(H: HamiltonianMatrix, psi0: np.ndarray,
                         times: np.ndarray) -> np.ndarray:
    """Amplitude-only variant of :func:`propagate` for hot loops.

    Returns the (len(times), 6) complex array of sector amplitudes at the
    requested times (not necessarily uniform), with t measured from 0.
    """
    spec = spectrum(H)
    coeff = spec.eigenvectors.conj().T @ np.asarray(psi0, dtype=complex)
    phases = np.exp(-1j * np.outer(spec.eigenvalues, np.asarray(times, dtype=float)))
    return (spec.eigenvectors @ (phases * coeff[:, None])).T


def total_excitation(psi: PureState) -> float:
    """Population in the single-excitation sector, Sum |a_i|^2.

    The vacuum weight is intentionally not included; it is reported
    separately by the open-system types.
    """
    return psi.sector_norm_sq()
