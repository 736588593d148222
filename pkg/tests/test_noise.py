"""Tests for noisy protocol runs, sweeps, and the advantage threshold."""
import numpy as np
import pytest

from qgames import (
    ChannelLocation,
    DensityMatrix2Q,
    EntanglerMode,
    NoiseKind,
    NoiseSpec,
    SearchConfig,
    StrategyParamsB,
    advantage_threshold,
    apply_noise,
    canonical_gates,
    canonical_pd,
    gamma_sweep,
    gate_from_B,
    run_protocol,
    run_protocol_noisy,
)
from qgames.errors import RangeError, ValidationError
from qgames.noise import symmetric_equilibrium_gate

PD = canonical_pd()
MODES = list(EntanglerMode)
SEARCH = SearchConfig(grid_resolution=16, refine_iters=120, eps_nash=1e-6, seed=0)


def random_density(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return DensityMatrix2Q(rho / np.trace(rho).real)


def random_gate(rng):
    return gate_from_B(StrategyParamsB(rng.uniform(0, np.pi / 2),
                                       rng.uniform(-np.pi, np.pi),
                                       rng.uniform(-np.pi, np.pi)))


class TestNoiseSpec:
    def test_probability_range(self):
        with pytest.raises(RangeError):
            NoiseSpec(kind=NoiseKind.TWO_QUBIT_DEPOLARIZING, p=1.5)
        with pytest.raises(RangeError):
            NoiseSpec(kind=NoiseKind.PER_QUBIT_DEPOLARIZING, p=-0.1)

    def test_kind_type_checked(self):
        with pytest.raises(ValidationError):
            NoiseSpec(kind="two_qubit_depolarizing", p=0.5)

    def test_invalid_spec_rejected_by_runner(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        with pytest.raises(ValidationError):
            run_protocol_noisy(PD, 0.0, EntanglerMode.DEFECT, named.C, named.C,
                               {"kind": "none"})


class TestDensityMatrix:
    def test_requires_hermitian(self):
        m = np.eye(4, dtype=complex)
        m[0, 1] = 1j
        with pytest.raises(ValidationError):
            DensityMatrix2Q(m)

    def test_requires_unit_trace(self):
        with pytest.raises(ValidationError):
            DensityMatrix2Q(np.eye(4) / 2)

    def test_requires_positive(self):
        with pytest.raises(ValidationError):
            DensityMatrix2Q(np.diag([1.5, -0.5, 0, 0]))


class TestChannels:
    def test_noiseless_matches_pure_protocol_exactly(self):
        rng = np.random.default_rng(50)
        spec = NoiseSpec(kind=NoiseKind.NONE)
        for _ in range(100):
            u, v = random_gate(rng), random_gate(rng)
            gamma = rng.uniform(0, np.pi / 2)
            mode = MODES[int(rng.integers(2))]
            pure = run_protocol(PD, gamma, mode, u, v)
            noisy = run_protocol_noisy(PD, gamma, mode, u, v, spec)
            assert np.abs(noisy.distribution.probs - pure.distribution.probs).max() < 1e-12

    def test_p_zero_of_any_kind_is_noiseless(self):
        rng = np.random.default_rng(51)
        for kind in (NoiseKind.PER_QUBIT_DEPOLARIZING, NoiseKind.TWO_QUBIT_DEPOLARIZING):
            for _ in range(50):
                u, v = random_gate(rng), random_gate(rng)
                gamma = rng.uniform(0, np.pi / 2)
                mode = MODES[int(rng.integers(2))]
                pure = run_protocol(PD, gamma, mode, u, v)
                noisy = run_protocol_noisy(PD, gamma, mode, u, v,
                                           NoiseSpec(kind=kind, p=0.0))
                assert np.abs(noisy.distribution.probs - pure.distribution.probs).max() < 1e-12

    def test_full_two_qubit_depolarizing_is_uniform(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        spec = NoiseSpec(kind=NoiseKind.TWO_QUBIT_DEPOLARIZING, p=1.0)
        r = run_protocol_noisy(PD, np.pi / 2, EntanglerMode.DEFECT,
                               named.Q, named.Q, spec)
        assert np.abs(r.distribution.probs - 0.25).max() < 1e-12
        assert abs(r.payoff_I - 9 / 4) < 1e-12 and abs(r.payoff_II - 9 / 4) < 1e-12

    def test_per_qubit_noisy_qq_pinned_value(self):
        # exact Kraus evaluation gives 211/75 at p=0.1 (between 9/4 and 3)
        spec = NoiseSpec(kind=NoiseKind.PER_QUBIT_DEPOLARIZING, p=0.1)
        for mode in MODES:
            named = canonical_gates(mode)
            r = run_protocol_noisy(PD, np.pi / 2, mode, named.Q, named.Q, spec)
            assert abs(r.payoff_I - 211 / 75) < 1e-9
            assert 9 / 4 < r.payoff_I < 3.0
            assert 9 / 4 < r.payoff_II < 3.0

    def test_trace_and_positivity_preserved_500_cases(self):
        rng = np.random.default_rng(4040)
        kinds = (NoiseKind.PER_QUBIT_DEPOLARIZING, NoiseKind.TWO_QUBIT_DEPOLARIZING)
        for _ in range(500):
            rho = random_density(rng)
            spec = NoiseSpec(kind=kinds[int(rng.integers(2))],
                             p=float(rng.uniform(0, 1)))
            out = apply_noise(rho, spec)  # constructor enforces the invariants
            assert abs(np.trace(out.entries).real - 1.0) < 1e-9
            assert np.linalg.eigvalsh(out.entries).min() >= -1e-9

    def test_positivity_along_protocol_steps(self):
        rng = np.random.default_rng(60)
        for p in np.linspace(0, 1, 11):
            spec = NoiseSpec(kind=NoiseKind.PER_QUBIT_DEPOLARIZING, p=float(p))
            u, v = random_gate(rng), random_gate(rng)
            r = run_protocol_noisy(PD, np.pi / 3, EntanglerMode.DEFECT, u, v, spec)
            assert abs(r.distribution.probs.sum() - 1.0) < 1e-9

    def test_noisy_payoffs_stay_in_cell_range(self):
        rng = np.random.default_rng(61)
        for _ in range(200):
            spec = NoiseSpec(
                kind=(NoiseKind.PER_QUBIT_DEPOLARIZING, NoiseKind.TWO_QUBIT_DEPOLARIZING,
                      NoiseKind.NONE)[int(rng.integers(3))],
                p=float(rng.uniform(0, 1)),
                location=(ChannelLocation.RETURN, ChannelLocation.FORWARD)[int(rng.integers(2))])
            r = run_protocol_noisy(PD, rng.uniform(0, np.pi / 2),
                                   MODES[int(rng.integers(2))],
                                   random_gate(rng), random_gate(rng), spec)
            assert -1e-12 <= r.payoff_I <= 5 + 1e-12
            assert -1e-12 <= r.payoff_II <= 5 + 1e-12

    def test_depolarizing_locations_coincide(self):
        # Depolarizing channels are unitarily covariant, so they commute
        # with the players' local gates: the forward and return insertion
        # points are equivalent for both shipped kinds.
        rng = np.random.default_rng(62)
        for kind in (NoiseKind.PER_QUBIT_DEPOLARIZING, NoiseKind.TWO_QUBIT_DEPOLARIZING):
            for _ in range(25):
                u, v = random_gate(rng), random_gate(rng)
                p = float(rng.uniform(0, 1))
                gamma = rng.uniform(0, np.pi / 2)
                ret = run_protocol_noisy(PD, gamma, EntanglerMode.DEFECT, u, v,
                                         NoiseSpec(kind=kind, p=p))
                fwd = run_protocol_noisy(PD, gamma, EntanglerMode.DEFECT, u, v,
                                         NoiseSpec(kind=kind, p=p,
                                                   location=ChannelLocation.FORWARD))
                assert np.abs(ret.distribution.probs - fwd.distribution.probs).max() < 1e-12


class TestGammaSweep:
    def test_qq_endpoints(self):
        for mode in MODES:
            named = canonical_gates(mode)
            cols, rows = gamma_sweep(PD, mode, named.Q, named.Q, steps=9)
            assert cols == ("gamma", "payoff_I", "payoff_II")
            assert rows[0, 0] == 0.0 and abs(rows[-1, 0] - np.pi / 2) < 1e-15
            # classically Q acts like C, so gamma=0 lands on (C,C)=(3,3)
            assert abs(rows[0, 1] - 3.0) < 1e-12 and abs(rows[0, 2] - 3.0) < 1e-12
            assert abs(rows[-1, 1] - 3.0) < 1e-9 and abs(rows[-1, 2] - 3.0) < 1e-9

    def test_cc_constant(self):
        for mode in MODES:
            named = canonical_gates(mode)
            _, rows = gamma_sweep(PD, mode, named.C, named.C, steps=25)
            assert np.abs(rows[:, 1] - 3.0).max() < 1e-12
            assert np.abs(rows[:, 2] - 3.0).max() < 1e-12

    def test_cq_profile_varies_with_gamma(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        _, rows = gamma_sweep(PD, EntanglerMode.DEFECT, named.C, named.Q, steps=5)
        assert abs(rows[0, 1] - 3.0) < 1e-12   # classical limit: Q plays like C
        assert abs(rows[2, 1] - 2.0) < 1e-12   # midpoint, oracle-derived
        assert abs(rows[-1, 1] - 1.0) < 1e-12

    def test_two_steps_gives_endpoints_only(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        _, rows = gamma_sweep(PD, EntanglerMode.DEFECT, named.C, named.D, steps=2)
        assert rows.shape == (2, 3)
        assert rows[0, 0] == 0.0 and abs(rows[1, 0] - np.pi / 2) < 1e-15

    def test_steps_validated(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        with pytest.raises(RangeError):
            gamma_sweep(PD, EntanglerMode.DEFECT, named.C, named.C, steps=1)


class TestAdvantageThreshold:
    def test_symmetric_equilibrium_gate_is_q_in_defect_mode(self):
        gate = symmetric_equilibrium_gate(PD, np.pi / 2, EntanglerMode.DEFECT, SEARCH)
        assert np.abs(gate.matrix - np.diag([1j, -1j])).max() < 1e-9

    def test_none_kind_reports_no_threshold(self):
        res = advantage_threshold(PD, EntanglerMode.DEFECT, NoiseKind.NONE, SEARCH)
        assert not res.found and res.p_star is None
        assert abs(res.payoff_noiseless - 3.0) < 1e-9

    def test_two_qubit_threshold_pinned(self):
        res = advantage_threshold(PD, EntanglerMode.DEFECT,
                                  NoiseKind.TWO_QUBIT_DEPOLARIZING, SEARCH)
        assert res.found
        # payoff(p) = 3 - 0.75 p crosses 2.5 at p = 2/3
        assert abs(res.p_star - 2 / 3) < 2e-3
        assert abs(res.payoff_full_noise - 9 / 4) < 1e-12

    def test_per_qubit_threshold_pinned(self):
        res = advantage_threshold(PD, EntanglerMode.DEFECT,
                                  NoiseKind.PER_QUBIT_DEPOLARIZING, SEARCH)
        assert res.found
        assert abs(res.p_star - 0.3169872981) < 2e-3

    def test_reproducible_to_tolerance(self):
        r1 = advantage_threshold(PD, EntanglerMode.DEFECT,
                                 NoiseKind.TWO_QUBIT_DEPOLARIZING, SEARCH)
        r2 = advantage_threshold(PD, EntanglerMode.DEFECT,
                                 NoiseKind.TWO_QUBIT_DEPOLARIZING, SEARCH)
        assert r1.p_star == r2.p_star  # deterministic bisection

    def test_pauli_x_mode_same_threshold(self):
        # The symmetric set-A equilibrium differs per mode, but the
        # noisy payoff curve of the located profile is identical.
        res = advantage_threshold(PD, EntanglerMode.PAULI_X,
                                  NoiseKind.TWO_QUBIT_DEPOLARIZING, SEARCH)
        assert res.found
        assert abs(res.p_star - 2 / 3) < 2e-3
