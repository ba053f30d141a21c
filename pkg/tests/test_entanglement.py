"""Reduced two-mode densities and concurrence, checked against brute force.

The oracle here embeds a single-excitation state into the full 2^6 Fock
space, forms the 64x64 density matrix, and partial-traces by explicit
index bookkeeping.  Slow and obviously correct.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maglink import (
    Mode,
    PAIRS,
    SystemParams,
    TimeGrid,
    ValidationError,
    build_hamiltonian,
    concurrence_series,
    concurrence_single_excitation,
    concurrence_wootters,
    initial_state,
    propagate,
    reduce_two_mode,
)
from maglink.entanglement import TwoQubitDensity
from maglink.hilbert import PureState


def embed_64(amps, vacuum=0.0):
    """Full Fock-space vector; mode i occupies bit (5 - i) of the index."""
    v = np.zeros(64, dtype=complex)
    v[0] = vacuum
    for i in range(6):
        v[1 << (5 - i)] = amps[i]
    return v


def brute_force_reduced(amps, A, B, vacuum=0.0):
    """Partial trace of the embedded |psi><psi| down to modes (A, B)."""
    v = embed_64(amps, vacuum)
    rho = np.outer(v, v.conj())
    out = np.zeros((4, 4), dtype=complex)
    others = [m for m in range(6) if m not in (int(A), int(B))]
    for i in range(64):
        for j in range(64):
            ia = (i >> (5 - int(A))) & 1
            ib = (i >> (5 - int(B))) & 1
            ja = (j >> (5 - int(A))) & 1
            jb = (j >> (5 - int(B))) & 1
            if all(((i >> (5 - m)) & 1) == ((j >> (5 - m)) & 1)
                   for m in others):
                out[2 * ia + ib, 2 * ja + jb] += rho[i, j]
    return out


def random_single_excitation(rng, sub_normalized=False):
    a = rng.normal(size=6) + 1j * rng.normal(size=6)
    a /= np.linalg.norm(a)
    vac = 0.0
    if sub_normalized:
        vac_weight = rng.uniform(0.0, 0.6)
        a *= math.sqrt(1.0 - vac_weight)
        vac = math.sqrt(vac_weight) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    return a, vac


class TestReduceTwoMode:
    def test_unexcited_pair_is_vacuum(self):
        rho = reduce_two_mode(initial_state(Mode.Q1), Mode.M1, Mode.M2)
        assert np.allclose(rho.matrix, np.diag([1.0, 0, 0, 0]), atol=1e-14)

    def test_bell_superposition(self):
        a = np.zeros(6, dtype=complex)
        a[Mode.Q1] = a[Mode.Q2] = 1.0 / math.sqrt(2.0)
        rho = reduce_two_mode(PureState(amplitudes=a), Mode.Q1, Mode.Q2).matrix
        assert rho[2, 2] == pytest.approx(0.5, abs=1e-12)
        assert rho[1, 1] == pytest.approx(0.5, abs=1e-12)
        assert rho[2, 1] == pytest.approx(0.5, abs=1e-12)
        assert rho[3, 3] == pytest.approx(0.0, abs=1e-15)

    def test_same_mode_rejected(self):
        with pytest.raises(ValidationError):
            reduce_two_mode(initial_state(Mode.Q1), Mode.M1, Mode.M1)

    def test_matches_brute_force_on_random_states(self):
        rng = np.random.default_rng(42)
        pairs = list(PAIRS.values()) + [(Mode.C1, Mode.C2), (Mode.C1, Mode.Q2)]
        for _ in range(20):
            a, _ = random_single_excitation(rng)
            A, B = pairs[rng.integers(len(pairs))]
            got = reduce_two_mode(PureState(amplitudes=a), A, B).matrix
            want = brute_force_reduced(a, A, B)
            assert np.abs(got - want).max() <= 1e-12

    def test_matches_brute_force_with_vacuum_weight(self):
        rng = np.random.default_rng(43)
        for _ in range(10):
            a, vac = random_single_excitation(rng, sub_normalized=True)
            got = reduce_two_mode(PureState(amplitudes=a, vacuum=vac),
                                  Mode.M1, Mode.M2).matrix
            want = brute_force_reduced(a, Mode.M1, Mode.M2, vacuum=vac)
            assert np.abs(got - want).max() <= 1e-12

    def test_matches_brute_force_along_trajectory(self):
        p = SystemParams(g_m=0.4, g_q=0.3, J=0.35)
        traj = propagate(build_hamiltonian(p), initial_state(Mode.Q1),
                         TimeGrid(0.0, 1.7, 9))
        for s in traj.states:
            got = reduce_two_mode(s, Mode.M1, Mode.M2).matrix
            want = brute_force_reduced(s.amplitudes, Mode.M1, Mode.M2)
            assert np.abs(got - want).max() <= 1e-12

    def test_trace_one_and_psd(self):
        rng = np.random.default_rng(44)
        for _ in range(10):
            a, vac = random_single_excitation(rng, sub_normalized=True)
            rho = reduce_two_mode(PureState(amplitudes=a, vacuum=vac),
                                  Mode.Q1, Mode.M2).matrix
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
            assert np.linalg.eigvalsh(rho).min() >= -1e-10


class TestWootters:
    def test_bell_state_is_one(self):
        rho = np.zeros((4, 4), dtype=complex)
        rho[1, 1] = rho[2, 2] = 0.5
        rho[1, 2] = rho[2, 1] = 0.5
        c = concurrence_wootters(TwoQubitDensity(matrix=rho,
                                                 pair=(Mode.M1, Mode.M2)))
        assert c == pytest.approx(1.0, abs=1e-12)

    def test_diagonal_state_is_zero(self):
        rho = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
        c = concurrence_wootters(TwoQubitDensity(matrix=rho,
                                                 pair=(Mode.M1, Mode.M2)))
        assert c == pytest.approx(0.0, abs=1e-12)

    def test_x_state_formula_cross_check(self):
        # rho with empty |11> population: C = 2 |rho_{10,01}|
        rng = np.random.default_rng(5)
        for _ in range(25):
            p10 = rng.uniform(0.05, 0.5)
            p01 = rng.uniform(0.05, 0.5)
            coh = rng.uniform(0.0, math.sqrt(p10 * p01))
            coh = coh * np.exp(1j * rng.uniform(0, 2 * np.pi))
            rho = np.diag([1.0 - p10 - p01, p01, p10, 0.0]).astype(complex)
            rho[2, 1] = coh
            rho[1, 2] = np.conj(coh)
            c = concurrence_wootters(TwoQubitDensity(matrix=rho,
                                                     pair=(Mode.M1, Mode.M2)))
            assert c == pytest.approx(2.0 * abs(coh), abs=1e-12)

    def test_grossly_non_psd_rejected(self):
        rho = np.diag([1.5, 0.5, 0.0, -1.0]).astype(complex)
        with pytest.raises(ValidationError):
            concurrence_wootters(TwoQubitDensity(matrix=rho,
                                                 pair=(Mode.M1, Mode.M2)))


class TestFastPath:
    def test_equal_amplitudes_give_one(self):
        a = np.zeros(6, dtype=complex)
        a[Mode.M1] = a[Mode.M2] = 1.0 / math.sqrt(2.0)
        c = concurrence_single_excitation(PureState(amplitudes=a),
                                          Mode.M1, Mode.M2)
        assert c == pytest.approx(1.0, abs=1e-15)

    def test_zero_amplitude_gives_zero(self):
        c = concurrence_single_excitation(initial_state(Mode.Q1),
                                          Mode.M1, Mode.M2)
        assert c == 0.0

    def test_agrees_with_wootters_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            a, vac = random_single_excitation(
                rng, sub_normalized=bool(rng.integers(2)))
            psi = PureState(amplitudes=a, vacuum=vac)
            A, B = list(PAIRS.values())[rng.integers(4)]
            fast = concurrence_single_excitation(psi, A, B)
            slow = concurrence_wootters(reduce_two_mode(psi, A, B))
            assert abs(fast - slow) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from(sorted(PAIRS)))
    def test_oracle_agreement_property(self, seed, pair):
        rng = np.random.default_rng(seed)
        a, vac = random_single_excitation(rng, sub_normalized=True)
        psi = PureState(amplitudes=a, vacuum=vac)
        A, B = PAIRS[pair]
        fast = concurrence_single_excitation(psi, A, B)
        slow = concurrence_wootters(reduce_two_mode(psi, A, B))
        assert abs(fast - slow) <= 1e-12

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(8)
        a, _ = random_single_excitation(rng)
        base = concurrence_single_excitation(PureState(amplitudes=a),
                                             Mode.M1, Mode.M2)
        for phi in (0.3, 1.1, 4.0):
            rot = concurrence_single_excitation(
                PureState(amplitudes=a * np.exp(1j * phi)), Mode.M1, Mode.M2)
            assert rot == pytest.approx(base, abs=1e-14)

    def test_coherence_bound(self):
        # X-structure: C never exceeds 2 sqrt(rho_10 rho_01)
        rng = np.random.default_rng(9)
        for _ in range(50):
            a, vac = random_single_excitation(rng, sub_normalized=True)
            psi = PureState(amplitudes=a, vacuum=vac)
            rho = reduce_two_mode(psi, Mode.Q1, Mode.M2).matrix
            c = concurrence_single_excitation(psi, Mode.Q1, Mode.M2)
            bound = 2.0 * math.sqrt(rho[2, 2].real * rho[1, 1].real)
            assert c <= bound + 1e-12


class TestSeries:
    def test_initial_product_state_starts_at_zero(self):
        p = SystemParams(g_m=0.4, g_q=0.3, J=0.35)
        traj = propagate(build_hamiltonian(p), initial_state(Mode.Q1),
                         TimeGrid(0.0, 0.1, 11))
        for pair in PAIRS.values():
            cs = concurrence_series(traj, *pair)
            assert cs.values[0] == pytest.approx(0.0, abs=1e-12)

    def test_uncoupled_cavities_never_entangle_magnons(self):
        p = SystemParams(g_m=0.4, g_q=0.3, J=0.0)
        traj = propagate(build_hamiltonian(p), initial_state(Mode.Q1),
                         TimeGrid(0.0, 0.2, 101))
        cs = concurrence_series(traj, Mode.M1, Mode.M2)
        assert np.abs(cs.values).max() <= 1e-12

    def test_values_bounded(self):
        p = SystemParams(g_m=1.3, g_q=0.9, J=0.6)
        traj = propagate(build_hamiltonian(p), initial_state(Mode.Q1),
                         TimeGrid(0.0, 0.05, 401))
        for pair in PAIRS.values():
            cs = concurrence_series(traj, *pair)
            assert np.all(cs.values >= 0.0)
            assert np.all(cs.values <= 1.0 + 1e-12)

    def test_peak_matches_closed_form_anchor(self):
        # r_q = 0.75 at the optimal coupling: peak 0.5986 near t = 5.924
        j_opt = math.sqrt((0.4 ** 2 + 0.3 ** 2) / 2.0)
        p = SystemParams(g_m=0.4, g_q=0.3, J=j_opt)
        traj = propagate(build_hamiltonian(p), initial_state(Mode.Q1),
                         TimeGrid(0.0, 8.0 / 4000, 4001))
        cs = concurrence_series(traj, Mode.M1, Mode.M2)
        k = int(np.argmax(cs.values))
        assert cs.values[k] == pytest.approx(0.598596759095804, abs=1e-6)
        assert cs.times[k] == pytest.approx(5.923843917544487, abs=2e-3)


def test_cross_pair_relations_along_series():
    """q1m2 * r_q = qq and m1q2 = r_q * mm, pointwise."""
    rng = np.random.default_rng(10)
    for _ in range(3):
        g_m = rng.uniform(0.2, 1.5)
        g_q = rng.uniform(0.2, 1.5)
        p = SystemParams(g_m=g_m, g_q=g_q, J=rng.uniform(0.1, 1.0))
        r_q = g_q / g_m
        traj = propagate(build_hamiltonian(p), initial_state(Mode.Q1),
                         TimeGrid(0.0, 0.11, 181))
        mm = concurrence_series(traj, *PAIRS["mm"]).values
        qq = concurrence_series(traj, *PAIRS["qq"]).values
        q1m2 = concurrence_series(traj, *PAIRS["q1m2"]).values
        m1q2 = concurrence_series(traj, *PAIRS["m1q2"]).values
        assert np.abs(q1m2 * r_q - qq).max() <= 1e-10
        assert np.abs(m1q2 - r_q * mm).max() <= 1e-10


def test_amplitude_level_identity():
    # the cross-pair relations descend from g_q a_m2(t) = g_m a_q2(t)
    p = SystemParams(g_m=0.8, g_q=0.45, J=0.3)
    traj = propagate(build_hamiltonian(p), initial_state(Mode.Q1),
                     TimeGrid(0.0, 0.23, 97))
    amps = traj.amplitude_array()
    lhs = p.g_q * amps[:, Mode.M2]
    rhs = p.g_m * amps[:, Mode.Q2]
    assert np.abs(lhs - rhs).max() <= 1e-10
