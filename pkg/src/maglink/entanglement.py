"""Reduced two-mode density operators and concurrence.

Two routes are kept deliberately separate: the general Wootters eigenvalue
construction (the oracle), and the single-excitation fast path
C = 2|a_A||a_B| that the sector's X-structure makes exact.  Both are exposed
and cross-checked in the tests rather than collapsed into one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import Mode, PureState, StateTrajectory
from .params import ValidationError

# canonical pair labels, first label = qubit A = left tensor factor
PAIRS: dict[str, tuple[Mode, Mode]] = {
    "mm": (Mode.M1, Mode.M2),
    "qq": (Mode.Q1, Mode.Q2),
    "q1m2": (Mode.Q1, Mode.M2),
    "m1q2": (Mode.M1, Mode.Q2),
}

_SY_SY = np.array([[0, 0, 0, -1],
                   [0, 0, 1, 0],
                   [0, 1, 0, 0],
                   [-1, 0, 0, 0]], dtype=complex)


@dataclass(frozen=True)
class TwoQubitDensity:
    """4x4 density matrix for a mode pair in the basis {|00>,|01>,|10>,|11>}.

    The first pair label is qubit A, the left tensor factor, so |10> means
    "A excited, B not".  Hermiticity, unit trace, and positivity (min
    eigenvalue >= -psd_tol) are enforced on construction; psd_tol defaults
    to 1e-10 and is widened by callers averaging finite Monte Carlo
    ensembles.
    """

    matrix: np.ndarray
    pair: tuple[Mode, Mode]
    psd_tol: float = 1e-10

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError([f"density shape {m.shape} != (4, 4)"])
        object.__setattr__(self, "matrix", m)
        if float(np.abs(m - m.conj().T).max()) > 1e-10:
            raise ValidationError(["two-qubit density not Hermitian"])
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > 1e-10:
            raise ValidationError([f"two-qubit density trace {tr} != 1"])
        min_eig = float(np.linalg.eigvalsh(m).min())
        if min_eig < -self.psd_tol:
            raise ValidationError(
                [f"two-qubit density min eigenvalue {min_eig} < -{self.psd_tol}"])


@dataclass(frozen=True)
class ConcurrenceSeries:
    """Concurrence samples C(t) in [0, 1] for one mode pair."""

    pair: tuple[Mode, Mode]
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape:
            raise ValidationError(["times/values length mismatch"])
        if np.any(v < -1e-12) or np.any(v > 1.0 + 1e-9):
            raise ValidationError(["concurrence outside [0, 1]"])
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def reduce_two_mode(state, A: Mode, B: Mode, psd_tol: float = 1e-10) -> TwoQubitDensity:
    """Reduced density operator of the pair (A, B).

    Accepts a :class:`PureState` (with or without a vacuum amplitude) or a
    7x7 sector+vacuum density matrix (index 0 = vacuum, 1..6 = modes).  For
    a pure single-excitation state the result is the X-structured matrix

        rho[|10>,|10>] = |a_A|^2, rho[|01>,|01>] = |a_B|^2,
        rho[|10>,|01>] = a_A conj(a_B), rho[|11>,|11>] = 0,
        rho[|00>,|00>] = everything else (vacuum plus remaining modes).

    A 7x7 input is renormalized by its trace first (finite Monte Carlo
    ensembles drift slightly off trace one); pass the appropriate psd_tol
    for such inputs.
    """
    if A == B:
        raise ValidationError([f"pair ({A.name}, {A.name}) needs two distinct modes"])
    rho4 = np.zeros((4, 4), dtype=complex)
    if isinstance(state, PureState):
        a = state.amplitudes
        aA, aB = a[int(A)], a[int(B)]
        rho4[2, 2] = abs(aA) ** 2
        rho4[1, 1] = abs(aB) ** 2
        rho4[2, 1] = aA * np.conj(aB)
        rho4[1, 2] = np.conj(rho4[2, 1])
        if state.vacuum is None:
            rho4[0, 0] = 1.0 - rho4[2, 2].real - rho4[1, 1].real
        else:
            others = state.sector_norm_sq() - abs(aA) ** 2 - abs(aB) ** 2
            rho4[0, 0] = abs(state.vacuum) ** 2 + others
            rho4[2, 0] = aA * np.conj(state.vacuum)
            rho4[0, 2] = np.conj(rho4[2, 0])
            rho4[1, 0] = aB * np.conj(state.vacuum)
            rho4[0, 1] = np.conj(rho4[1, 0])
    else:
        rho7 = np.asarray(state, dtype=complex)
        if rho7.shape != (7, 7):
            raise ValidationError([f"density input shape {rho7.shape} != (7, 7)"])
        tr = float(np.trace(rho7).real)
        if tr <= 0.0:
            raise ValidationError([f"density trace {tr} must be positive"])
        rho7 = rho7 / tr
        iA, iB = int(A) + 1, int(B) + 1
        rho4[2, 2] = rho7[iA, iA]
        rho4[1, 1] = rho7[iB, iB]
        rho4[2, 1] = rho7[iA, iB]
        rho4[1, 2] = rho7[iB, iA]
        rho4[2, 0] = rho7[iA, 0]
        rho4[0, 2] = rho7[0, iA]
        rho4[1, 0] = rho7[iB, 0]
        rho4[0, 1] = rho7[0, iB]
        rest = [i for i in range(7) if i not in (iA, iB)]
        rho4[0, 0] = np.sum(np.diagonal(rho7)[rest])
    rho4 = 0.5 * (rho4 + rho4.conj().T)  # Hermitize against roundoff
    return TwoQubitDensity(matrix=rho4, pair=(A, B), psd_tol=psd_tol)


def concurrence_wootters(rho: TwoQubitDensity) -> float:
    """Wootters concurrence C = max(0, l1 - l2 - l3 - l4).

    The l_i are the descending square roots of the eigenvalues of
    rho (sy x sy) rho* (sy x sy).  Eigenvalues below the numerical noise
    floor are clipped to zero before the square root; without this the
    exactly-vanishing eigenvalues of rank-deficient products surface as
    ~1e-8 noise after sqrt.
    """
    m = rho.matrix
    min_eig = float(np.linalg.eigvalsh(m).min())
    if min_eig < -rho.psd_tol:
        raise ValidationError([f"non-PSD density (min eigenvalue {min_eig})"])
    r = m @ _SY_SY @ m.conj() @ _SY_SY
    evals = np.linalg.eigvals(r).real
    floor = 64.0 * np.finfo(float).eps * max(evals.max(initial=0.0), 0.0)
    evals = np.where(evals > floor, evals, 0.0)
    lam = np.sqrt(np.sort(evals)[::-1])
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence_single_excitation(psi: PureState, A: Mode, B: Mode) -> float:
    """Fast path for single-excitation pure states: C = 2 |a_A| |a_B|.

    Exact for any (possibly sub-normalized) state in the vacuum plus
    single-excitation span; agrees with the Wootters route to 1e-12.
    """
    a = psi.amplitudes
    return float(2.0 * abs(a[int(A)]) * abs(a[int(B)]))


def concurrence_series(traj, A: Mode, B: Mode) -> ConcurrenceSeries:
    """Concurrence along a trajectory.

    Pure-state trajectories (:class:`StateTrajectory`) take the fast path;
    density trajectories always go through the eigenvalue route, never the
    X-shortcut, since ensemble averaging need not preserve exact
    X-structure.
    """
    if isinstance(traj, StateTrajectory):
        amps = traj.amplitude_array()
        values = 2.0 * np.abs(amps[:, int(A)]) * np.abs(amps[:, int(B)])
        return ConcurrenceSeries(pair=(A, B), times=traj.grid.times(),
                                 values=np.minimum(values, 1.0 + 1e-15))
    # DensityTrajectory duck-typed to avoid a circular import
    values = np.empty(traj.grid.n)
    psd_tol = traj.psd_tolerance()
    for k in range(traj.grid.n):
        rho4 = reduce_two_mode(traj.rho[k], A, B, psd_tol=psd_tol)
        values[k] = concurrence_wootters(rho4)
    return ConcurrenceSeries(pair=(A, B), times=traj.grid.times(), values=values)
