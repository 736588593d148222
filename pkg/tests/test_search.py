"""Tests for best-response search and menu equilibria."""
import numpy as np
import pytest

from qgames import (
    EntanglerMode,
    Player,
    SearchConfig,
    StrategyParamsB,
    best_response,
    canonical_gates,
    canonical_pd,
    default_menu,
    gate_from_B,
    mixed_quantum_equilibrium,
    payoff_landscape,
    run_protocol,
    run_protocol_mixed,
    verify_eps_nash,
)
from qgames.errors import RangeError, ValidationError
from qgames.search import _batch_payoffs

PD = canonical_pd()
MODES = list(EntanglerMode)
FAST = SearchConfig(grid_resolution=16, refine_iters=120, eps_nash=1e-6, seed=1)
TINY = SearchConfig(grid_resolution=6, refine_iters=30, eps_nash=1e-6, seed=1)


def phase_equal(a, b, atol=1e-9):
    """True when two gates differ only by a global phase."""
    flat = a.matrix.ravel()
    k = int(np.argmax(np.abs(flat)))
    other = b.matrix.ravel()[k]
    if abs(other) < 1e-12:
        return False
    phase = flat[k] / other
    return np.abs(a.matrix - phase * b.matrix).max() < atol


def mixture_payoff_against(game, gamma, mode, gate, mixture, responder):
    """Independent expected payoff of a pure gate vs a mixed strategy."""
    total_i = total_ii = 0.0
    for w, g in mixture.support:
        if responder is Player.I:
            r = run_protocol(game, gamma, mode, gate, g)
        else:
            r = run_protocol(game, gamma, mode, g, gate)
        total_i += w * r.payoff_I
        total_ii += w * r.payoff_II
    return total_i if responder is Player.I else total_ii


class TestBatchEvaluator:
    def test_matches_run_protocol_both_modes_and_players(self):
        rng = np.random.default_rng(100)
        for _ in range(200):
            params = np.array([[rng.uniform(0, np.pi / 2),
                                rng.uniform(-np.pi, np.pi),
                                rng.uniform(-np.pi, np.pi)]])
            opp = gate_from_B(StrategyParamsB(rng.uniform(0, np.pi / 2),
                                              rng.uniform(-np.pi, np.pi),
                                              rng.uniform(-np.pi, np.pi)))
            gamma = rng.uniform(0, np.pi / 2)
            mode = MODES[int(rng.integers(2))]
            responder = Player.I if rng.random() < 0.5 else Player.II
            batch = _batch_payoffs(PD, gamma, mode, opp, responder, "B", params)[0]
            mine = gate_from_B(StrategyParamsB(*params[0]))
            if responder is Player.I:
                direct = run_protocol(PD, gamma, mode, mine, opp).payoff_I
            else:
                direct = run_protocol(PD, gamma, mode, opp, mine).payoff_II
            assert abs(batch - direct) < 1e-12


class TestBestResponse:
    def test_vs_c_at_gamma_zero_defects_for_5(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        br = best_response(PD, 0.0, EntanglerMode.DEFECT, named.C, Player.I, "A", FAST)
        assert abs(br.payoff - 5.0) < 1e-9

    def test_vs_q_in_space_a_capped_at_3_defect_mode(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        br = best_response(PD, np.pi / 2, EntanglerMode.DEFECT, named.Q, Player.I, "A", FAST)
        assert br.payoff <= 3.0 + 1e-6
        assert abs(br.payoff - 3.0) < 1e-9

    def test_vs_q_in_space_a_exploitable_in_pauli_x_mode(self):
        # Regression for the documented generator discrepancy: the
        # set-A defect gate reaches payoff 5 against Q here.
        named = canonical_gates(EntanglerMode.PAULI_X)
        br = best_response(PD, np.pi / 2, EntanglerMode.PAULI_X, named.Q, Player.I, "A", FAST)
        assert abs(br.payoff - 5.0) < 1e-9

    def test_vs_q_in_space_b_restores_dilemma(self):
        for mode in MODES:
            named = canonical_gates(mode)
            br = best_response(PD, np.pi / 2, mode, named.Q, Player.I, "B", FAST)
            assert br.payoff > 3.5
            assert abs(br.payoff - 5.0) < 1e-6  # pinned optimum

    def test_improvement_vs_incumbent(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        br = best_response(PD, 0.0, EntanglerMode.DEFECT, named.C, Player.I, "A", FAST,
                           incumbent=named.C)
        assert abs(br.improvement - 2.0) < 1e-9

    def test_menu_space(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        menu = [named.C, named.D, named.Q]
        br = best_response(PD, np.pi / 2, EntanglerMode.DEFECT, named.D, Player.I,
                           menu, FAST)
        assert br.params is None
        assert phase_equal(br.gate, named.Q)
        assert abs(br.payoff - 5.0) < 1e-12

    def test_space_b_dominates_space_a_500_seeds(self):
        grid_only = SearchConfig(grid_resolution=6, refine_iters=0, eps_nash=1e-6, seed=1)
        rng = np.random.default_rng(555)
        for k in range(500):
            opp = gate_from_B(StrategyParamsB(rng.uniform(0, np.pi / 2),
                                              rng.uniform(-np.pi, np.pi),
                                              rng.uniform(-np.pi, np.pi)))
            gamma = rng.uniform(0, np.pi / 2)
            mode = MODES[int(rng.integers(2))]
            responder = Player.I if rng.random() < 0.5 else Player.II
            # every case without refinement, every eighth case with it
            cfgs = [grid_only] if k % 8 else [grid_only, TINY]
            for cfg in cfgs:
                bra = best_response(PD, gamma, mode, opp, responder, "A", cfg)
                brb = best_response(PD, gamma, mode, opp, responder, "B", cfg)
                assert brb.payoff >= bra.payoff - 1e-9

    def test_deterministic_given_config(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        runs = [best_response(PD, np.pi / 2, EntanglerMode.DEFECT, named.Q,
                              Player.I, "B", FAST) for _ in range(2)]
        assert runs[0].payoff == runs[1].payoff
        assert runs[0].params == runs[1].params

    def test_invalid_space(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        with pytest.raises(ValidationError):
            best_response(PD, 0.0, EntanglerMode.DEFECT, named.C, Player.I, "Z", FAST)

    def test_config_validation(self):
        with pytest.raises(RangeError):
            SearchConfig(grid_resolution=1)
        with pytest.raises(RangeError):
            SearchConfig(eps_nash=0.0)


class TestVerifyEpsNash:
    def test_cc_fails_in_classical_menu(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        ok, imp = verify_eps_nash(PD, 0.0, EntanglerMode.DEFECT, named.C, named.C,
                                  [named.C, named.D], FAST)
        assert not ok
        assert abs(imp - 2.0) < 1e-12

    def test_qq_is_equilibrium_in_space_a_defect_mode(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        ok, imp = verify_eps_nash(PD, np.pi / 2, EntanglerMode.DEFECT,
                                  named.Q, named.Q, "A", FAST)
        assert ok
        assert imp <= 1e-6

    def test_qq_fails_in_space_a_pauli_x_mode(self):
        named = canonical_gates(EntanglerMode.PAULI_X)
        ok, imp = verify_eps_nash(PD, np.pi / 2, EntanglerMode.PAULI_X,
                                  named.Q, named.Q, "A", FAST)
        assert not ok
        assert abs(imp - 2.0) < 1e-6

    def test_qq_fails_in_space_b(self):
        for mode in MODES:
            named = canonical_gates(mode)
            ok, imp = verify_eps_nash(PD, np.pi / 2, mode, named.Q, named.Q, "B", FAST)
            assert not ok
            assert imp > 0.5

    def test_symmetric_improvements_match(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        br1 = best_response(PD, np.pi / 2, EntanglerMode.DEFECT, named.Q, Player.I,
                            "B", FAST, incumbent=named.Q)
        br2 = best_response(PD, np.pi / 2, EntanglerMode.DEFECT, named.Q, Player.II,
                            "B", FAST, incumbent=named.Q)
        assert abs(br1.improvement - br2.improvement) < 1e-6


class TestLandscape:
    def test_vs_c_classical_limit(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        cols, data = payoff_landscape(PD, 0.0, EntanglerMode.DEFECT, "A", named.C, FAST)
        assert cols == ("theta", "phi", "payoff")
        best = data[np.argmax(data[:, -1])]
        assert abs(best[-1] - 5.0) < 1e-9
        assert abs(best[0] - np.pi / 2) < 1e-9  # defect corner

    def test_vs_q_max_is_3_in_defect_mode(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        _, data = payoff_landscape(PD, np.pi / 2, EntanglerMode.DEFECT, "A", named.Q, FAST)
        assert abs(data[:, -1].max() - 3.0) < 1e-9

    def test_values_bounded_by_cells(self):
        named = canonical_gates(EntanglerMode.PAULI_X)
        _, data = payoff_landscape(PD, 1.0, EntanglerMode.PAULI_X, "B", named.D, TINY)
        assert data[:, -1].min() >= -1e-12
        assert data[:, -1].max() <= 5.0 + 1e-12

    def test_row_major_and_deterministic(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        _, d1 = payoff_landscape(PD, 0.7, EntanglerMode.DEFECT, "A", named.Q, TINY)
        _, d2 = payoff_landscape(PD, 0.7, EntanglerMode.DEFECT, "A", named.Q, TINY)
        assert np.array_equal(d1, d2)
        n = TINY.grid_resolution
        assert d1.shape == (n * n, 3)
        # first axis varies slowest
        assert np.all(np.diff(d1[:n, 0]) == 0)


class TestMixedQuantumEquilibrium:
    def test_classical_menu_at_gamma_zero(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        res = mixed_quantum_equilibrium(PD, 0.0, EntanglerMode.DEFECT,
                                        [named.C, named.D], FAST)
        assert res.method == "pure_fixed_point"
        assert abs(res.payoff_I - 1.0) < 1e-12 and abs(res.payoff_II - 1.0) < 1e-12
        assert len(res.strategy_I) == 1 and len(res.strategy_II) == 1
        assert phase_equal(res.strategy_I.support[0][1], named.D)

    def test_singleton_menu(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        res = mixed_quantum_equilibrium(PD, np.pi / 2, EntanglerMode.DEFECT,
                                        [named.Q], FAST)
        assert res.method == "pure_fixed_point"
        assert abs(res.payoff_I - 3.0) < 1e-9 and abs(res.payoff_II - 3.0) < 1e-9

    @pytest.mark.parametrize("mode", MODES)
    def test_default_menu_reaches_two_point_five(self, mode):
        menu = default_menu(mode)
        res = mixed_quantum_equilibrium(PD, np.pi / 2, mode, menu, FAST)
        assert abs(res.payoff_I - 2.5) <= 0.05
        assert abs(res.payoff_II - 2.5) <= 0.05
        # regression: half/half supports found by the cycle fallback
        assert res.method == "support_enumeration"
        assert sorted(w for w, _ in res.strategy_I.support) == [0.5, 0.5]
        assert sorted(w for w, _ in res.strategy_II.support) == [0.5, 0.5]
        # no pure menu deviation improves either player beyond eps
        for g in menu:
            dev_i = mixture_payoff_against(PD, np.pi / 2, mode, g,
                                           res.strategy_II, Player.I)
            dev_ii = mixture_payoff_against(PD, np.pi / 2, mode, g,
                                            res.strategy_I, Player.II)
            assert dev_i <= res.payoff_I + 1e-6
            assert dev_ii <= res.payoff_II + 1e-6
        # reported payoffs agree with an exact mixed protocol run
        replay = run_protocol_mixed(PD, np.pi / 2, mode,
                                    res.strategy_I, res.strategy_II)
        assert abs(replay.payoff_I - res.payoff_I) < 1e-9
        assert abs(replay.payoff_II - res.payoff_II) < 1e-9

    def test_default_menu_support_pinned_defect_mode(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        menu = default_menu(EntanglerMode.DEFECT)
        res = mixed_quantum_equilibrium(PD, np.pi / 2, EntanglerMode.DEFECT, menu, FAST)
        x_gate = gate_from_B(StrategyParamsB(np.pi / 2, 0.0, np.pi / 2))  # i*sigma_x
        got1 = [g for _, g in res.strategy_I.support]
        got2 = [g for _, g in res.strategy_II.support]
        assert any(phase_equal(g, named.D) for g in got1)
        assert any(phase_equal(g, x_gate) for g in got1)
        assert any(phase_equal(g, named.C) for g in got2)
        assert any(phase_equal(g, named.Q) for g in got2)

    def test_bit_identical_reruns(self):
        menu = default_menu(EntanglerMode.DEFECT)
        r1 = mixed_quantum_equilibrium(PD, np.pi / 2, EntanglerMode.DEFECT, menu, FAST)
        r2 = mixed_quantum_equilibrium(PD, np.pi / 2, EntanglerMode.DEFECT, menu, FAST)
        assert r1.payoff_I == r2.payoff_I and r1.payoff_II == r2.payoff_II
        assert [w for w, _ in r1.strategy_I.support] == [w for w, _ in r2.strategy_I.support]

    def test_empty_menu_rejected(self):
        with pytest.raises(ValidationError):
            mixed_quantum_equilibrium(PD, 0.0, EntanglerMode.DEFECT, [], FAST)

    def test_support_cap_precondition(self):
        named = canonical_gates(EntanglerMode.DEFECT)
        with pytest.raises(ValidationError):
            mixed_quantum_equilibrium(PD, 0.0, EntanglerMode.DEFECT,
                                      [named.C, named.D], FAST, support_cap=1)
