"""Closed-form resonant results and the independent numeric peak search.

The closed forms (optimal coupling/time, peak-concurrence curves, their
maximizers) come from the exactly solvable resonant dynamics; the numeric
peak search knows nothing about them and re-derives peaks by simulating
concurrence on a grid plus golden-section refinement.  The test suite and
the sweep commands cross-validate the two against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entanglement import PAIRS
from .hilbert import Frame, Mode, build_hamiltonian, initial_state, spectrum
from .params import SystemParams, ValidationError, validate_params


@dataclass(frozen=True)
class ResonantOptimum:
    """Resonant-case optimum: G0 = 4(g_m^2+g_q^2) + J^2 sets the peak clock.

    Peaks of the magnon-magnon concurrence occur at t = 2 n pi / sqrt(G0);
    the n = 1 peak is reached in the least time at J_opt =
    sqrt((g_m^2+g_q^2)/2), where t_opt = 2 pi / (3 J_opt).
    """

    g_m: float
    g_q: float
    n: int
    J: float
    G0: float
    t_peak: float
    J_opt: float
    t_opt: float


@dataclass(frozen=True)
class PeakCurvePoint:
    """One point of a Fig.-style peak-concurrence curve."""

    r_q: float
    pair: str
    C_peak: float
    eta: float

    def __post_init__(self):
        if not (-1e-12 <= self.C_peak <= 1.0 + 1e-12):
            raise ValidationError([f"C_peak={self.C_peak} outside [0, 1]"])
        if self.eta < 1.0 - 1e-12:
            raise ValidationError([f"eta={self.eta} < 1"])


@dataclass(frozen=True)
class RqMaximum:
    """Result of maximizing a peak curve over r_q.

    For the monotone qq curve there is no interior maximum; `interior` is
    False and the optimum fields are None.
    """

    pair: str
    r_q_opt: float | None
    c_peak: float | None
    interior: bool
    note: str = ""


@dataclass(frozen=True)
class PeakSearchResult:
    """Numeric peak location for a simulated concurrence curve."""

    t_star: float
    c_star: float
    pair: str


def resonant_optimum(g_m: float, g_q: float, n: int = 1,
                     J: float | None = None) -> ResonantOptimum:
    """Evaluate G0, the n-th peak time at coupling J, and the (J_opt, t_opt) pair.

    J defaults to J_opt, in which case t_peak(1) == t_opt.
    """
    if g_m < 0.0 or g_q < 0.0:
        raise ValidationError(["couplings must be >= 0"])
    gsq = g_m * g_m + g_q * g_q
    if gsq == 0.0:
        raise ValidationError(["g_m = g_q = 0 leaves no dynamics to optimize"])
    if n < 1:
        raise ValidationError([f"peak index n={n} must be >= 1"])
    j_opt = math.sqrt(gsq / 2.0)
    t_opt = 2.0 * math.pi / (3.0 * j_opt)
    j = j_opt if J is None else float(J)
    if j < 0.0:
        raise ValidationError([f"J={j} must be >= 0"])
    g0 = 4.0 * gsq + j * j
    t_peak = 2.0 * n * math.pi / math.sqrt(g0)
    return ResonantOptimum(g_m=g_m, g_q=g_q, n=n, J=j, G0=g0,
                           t_peak=t_peak, J_opt=j_opt, t_opt=t_opt)


def eta(r_q: float) -> float:
    """Auxiliary eta = sqrt(8 r_q^4 + 1) entering the qubit-qubit peak."""
    if r_q < 0.0:
        raise ValidationError([f"r_q={r_q} must be >= 0"])
    return math.sqrt(8.0 * r_q ** 4 + 1.0)


def peak_concurrence_mm(r_q: float) -> float:
    """Magnon-magnon peak at the optimal coupling: 3 sqrt(3) r^2 / (2 (r^2+1)^2)."""
    if r_q < 0.0:
        raise ValidationError([f"r_q={r_q} must be >= 0"])
    r2 = r_q * r_q
    return 3.0 * math.sqrt(3.0) * r2 / (2.0 * (r2 + 1.0) ** 2)


def peak_concurrence_qq(r_q: float) -> float:
    """Qubit-qubit peak: sqrt((eta-1)(eta+3)^3) / (8 (r^2+1)^2)."""
    e = eta(r_q)
    r2 = r_q * r_q
    return math.sqrt((e - 1.0) * (e + 3.0) ** 3) / (8.0 * (r2 + 1.0) ** 2)


def peak_concurrence_q1m2(r_q: float) -> float:
    """Qubit-magnon cross peak, C_qq / r_q; undefined at r_q = 0."""
    if r_q <= 0.0:
        raise ValidationError([f"q1m2 peak needs r_q > 0, got {r_q}"])
    return peak_concurrence_qq(r_q) / r_q


def peak_concurrence_m1q2(r_q: float) -> float:
    """Magnon-qubit cross peak, r_q * C_mm; maximum 27/32 at r_q = sqrt(3)."""
    if r_q < 0.0:
        raise ValidationError([f"r_q={r_q} must be >= 0"])
    return r_q * peak_concurrence_mm(r_q)


PEAK_CURVES = {
    "mm": peak_concurrence_mm,
    "qq": peak_concurrence_qq,
    "q1m2": peak_concurrence_q1m2,
    "m1q2": peak_concurrence_m1q2,
}


def golden_section_max(f, a: float, b: float, tol: float = 1e-10):
    """Maximize a unimodal f on [a, b] to absolute tolerance tol in x.

    Returns (x_star, f(x_star)).  Plain golden-section: two interior points,
    keep the bracket containing the larger value.
    """
    if not b > a:
        raise ValidationError([f"bracket [{a}, {b}] is empty"])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while d - c > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def maximize_over_rq(pair: str, bracket: tuple[float, float] = (0.1, 10.0),
                     tol: float = 1e-8) -> RqMaximum:
    """Golden-section maximum of a closed-form peak curve over r_q.

    The qq curve increases monotonically toward 1, so it has no interior
    maximum to report.
    """
    if pair not in PEAK_CURVES:
        raise ValidationError([f"unknown pair {pair!r}; valid: {sorted(PEAK_CURVES)}"])
    if pair == "qq":
        return RqMaximum(pair=pair, r_q_opt=None, c_peak=None, interior=False,
                         note="monotone in r_q; approaches 1 as r_q grows")
    a, b = bracket
    r_star, c_star = golden_section_max(PEAK_CURVES[pair], a, b, tol=tol)
    return RqMaximum(pair=pair, r_q_opt=r_star, c_peak=c_star, interior=True)


def _concurrence_evaluator(params: SystemParams, pair: str):
    """Closure t -> C_pair(t) for the closed system started in q1.

    One eigendecomposition up front; each evaluation is a 6-vector phase
    recombination, cheap enough for tens of thousands of golden-section
    calls.  Vectorized over t arrays.
    """
    validate_params(params)
    A, B = PAIRS[pair]
    spec = spectrum(build_hamiltonian(params, Frame.ROTATING_AT_OMEGA_Q))
    coeff = spec.eigenvectors.conj().T @ initial_state(Mode.Q1).amplitudes
    vA = spec.eigenvectors[int(A)] * coeff
    vB = spec.eigenvectors[int(B)] * coeff

    def c_of_t(t):
        phases = np.exp(-1j * np.multiply.outer(np.asarray(t, dtype=float),
                                                spec.eigenvalues))
        aA = phases @ vA
        aB = phases @ vB
        return 2.0 * np.abs(aA) * np.abs(aB)

    return c_of_t


def numeric_peak_search(params: SystemParams, pair: str,
                        t_window: tuple[float, float],
                        grid_per_period: int = 1000,
                        t_tol: float = 1e-10) -> PeakSearchResult:
    """Locate the peak of simulated C_pair(t) inside t_window.

    Coarse scan at `grid_per_period` points per resonant period 2 pi /
    sqrt(G0), then golden-section refinement around the best grid point to
    absolute time tolerance t_tol.  Knows nothing of the closed-form peak
    formulas; used to cross-validate them.
    """
    t0, t1 = t_window
    if not t1 > t0:
        raise ValidationError([f"empty time window ({t0}, {t1})"])
    if pair not in PAIRS:
        raise ValidationError([f"unknown pair {pair!r}; valid: {sorted(PAIRS)}"])
    c_of_t = _concurrence_evaluator(params, pair)
    gsq = params.g_m ** 2 + params.g_q ** 2
    period = 2.0 * math.pi / math.sqrt(4.0 * gsq + params.J ** 2) if gsq > 0 else (t1 - t0)
    npts = max(16, int(math.ceil(grid_per_period * (t1 - t0) / period)))
    ts = np.linspace(t0, t1, npts)
    cs = c_of_t(ts)
    k = int(np.argmax(cs))
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, npts - 1)]
    if hi <= lo:  # peak pinned to a window edge
        return PeakSearchResult(t_star=float(ts[k]), c_star=float(cs[k]), pair=pair)
    t_star, c_star = golden_section_max(lambda t: float(c_of_t(t)), float(lo),
                                        float(hi), tol=t_tol)
    if cs[k] > c_star:
        t_star, c_star = float(ts[k]), float(cs[k])
    return PeakSearchResult(t_star=t_star, c_star=c_star, pair=pair)


def find_optimal_coupling(g_m: float, g_q: float, pair: str,
                          j_tol: float = 1e-6) -> tuple[float, float, float]:
    """Numerically find the J maximizing the peak concurrence of a pair.

    Outer golden-section over J in (0, 4 g_m (1 + r_q)], inner numeric peak
    search over one resonant period (padded 10%).  Returns (J*, t*, C*).
    The magnon-magnon optimum has the closed form sqrt((g_m^2+g_q^2)/2);
    this search is the independent numeric route used for every pair.
    """
    if g_m <= 0.0 or g_q < 0.0:
        raise ValidationError(["need g_m > 0 and g_q >= 0"])
    r_q = g_q / g_m
    j_hi = 4.0 * g_m * (1.0 + r_q)
    j_lo = 1e-6 * j_hi

    def peak_at(j):
        p = SystemParams(g_m=g_m, g_q=g_q, J=j)
        window = (0.0, 1.1 * 2.0 * math.pi / math.sqrt(4.0 * (g_m ** 2 + g_q ** 2) + j * j))
        return numeric_peak_search(p, pair, window)

    j_star, _ = golden_section_max(lambda j: peak_at(j).c_star, j_lo, j_hi, tol=j_tol)
    best = peak_at(j_star)
    return j_star, best.t_star, best.c_star
