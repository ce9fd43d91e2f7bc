import numpy as np
import pytest

from ancvi.errors import BadGamma, ConfigMismatch, DimensionMismatch, KindMismatch
from ancvi.hard import build_hard
from ancvi.mdp import Kind, Mdp, Policy, ValueFn, sup_norm_diff
from ancvi.operators import (
    Mode,
    Operator,
    anti_greedy_policy,
    apply,
    bellman_error,
    fixed_point,
    greedy_policy,
)
from helpers import (
    oracle_consistency,
    oracle_gs,
    oracle_optimality,
    random_mdp,
    random_policy,
    random_values,
)

ALL_MODES = list(Mode)


def make_operator(rng, mdp, mode, kind):
    policy = random_policy(rng, mdp) if mode is Mode.CONSISTENCY else None
    return Operator(mdp, mode, kind, policy)


class TestApply:
    def test_hard_mdp_reward_step(self):
        # the chain pays only in state 2, so T applied to zero is the reward
        inst = build_hard(4, 0.9)
        op = Operator(inst.mdp, Mode.OPTIMALITY, Kind.STATE_VALUE)
        out = apply(op, ValueFn.zeros(inst.mdp, Kind.STATE_VALUE))
        assert np.allclose(out.values, [0.0, 1.0, 0.0, 0.0], atol=0)

    def test_zero_rewards_zero_fixed(self):
        rng = np.random.default_rng(31)
        mdp = random_mdp(rng, 5, 3)
        mdp = Mdp(5, 3, mdp.transitions, np.zeros((5, 3)), 0.9)
        for mode in ALL_MODES:
            for kind in Kind:
                op = make_operator(rng, mdp, mode, kind)
                out = op.apply_values(np.zeros(op.length))
                assert np.allclose(out, 0.0, atol=0)

    def test_optimality_matches_bruteforce(self):
        rng = np.random.default_rng(32)
        for _ in range(10):
            mdp = random_mdp(rng, 3, 2)
            for kind in Kind:
                u = random_values(rng, mdp, kind)
                got = Operator(mdp, Mode.OPTIMALITY, kind).apply_values(u)
                np.testing.assert_allclose(got, oracle_optimality(mdp, u, kind), atol=1e-12)
                got = Operator(mdp, Mode.ANTI_OPTIMALITY, kind).apply_values(u)
                np.testing.assert_allclose(
                    got, oracle_optimality(mdp, u, kind, use_min=True), atol=1e-12
                )

    def test_consistency_matches_bruteforce(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            mdp = random_mdp(rng, 4, 3)
            pol = random_policy(rng, mdp)
            for kind in Kind:
                u = random_values(rng, mdp, kind)
                got = Operator(mdp, Mode.CONSISTENCY, kind, pol).apply_values(u)
                np.testing.assert_allclose(got, oracle_consistency(mdp, pol, u, kind), atol=1e-12)

    def test_gs_matches_coordinate_oracle(self):
        rng = np.random.default_rng(34)
        for _ in range(6):
            mdp = random_mdp(rng, 4, 3)
            for kind in Kind:
                u = random_values(rng, mdp, kind)
                got = Operator(mdp, Mode.GS_OPTIMALITY, kind).apply_values(u)
                np.testing.assert_allclose(got, oracle_gs(mdp, u, kind), atol=1e-12)
                got = Operator(mdp, Mode.GS_ANTI_OPTIMALITY, kind).apply_values(u)
                np.testing.assert_allclose(got, oracle_gs(mdp, u, kind, use_min=True), atol=1e-12)

    def test_dimension_and_kind_checks(self):
        rng = np.random.default_rng(35)
        mdp = random_mdp(rng, 4, 3)
        op = Operator(mdp, Mode.OPTIMALITY, Kind.STATE_VALUE)
        with pytest.raises(KindMismatch):
            apply(op, ValueFn.zeros(mdp, Kind.STATE_ACTION_VALUE))
        with pytest.raises(DimensionMismatch):
            apply(op, ValueFn(Kind.STATE_VALUE, np.zeros(5)))

    def test_consistency_needs_policy(self):
        rng = np.random.default_rng(36)
        mdp = random_mdp(rng)
        with pytest.raises(ConfigMismatch):
            Operator(mdp, Mode.CONSISTENCY, Kind.STATE_VALUE)
        with pytest.raises(ConfigMismatch):
            Operator(mdp, Mode.OPTIMALITY, Kind.STATE_VALUE, random_policy(rng, mdp))


class TestPolicyExtraction:
    def test_single_action_only_policy(self):
        rng = np.random.default_rng(37)
        mdp = random_mdp(rng, 4, 1)
        u = ValueFn(Kind.STATE_VALUE, rng.normal(size=4))
        assert np.all(greedy_policy(mdp, u).actions() == 0)
        assert np.all(anti_greedy_policy(mdp, u).actions() == 0)

    def test_hard_mdp_single_action(self):
        inst = build_hard(5, 0.9)
        u = ValueFn(Kind.STATE_VALUE, np.random.default_rng(0).normal(size=5))
        assert np.all(greedy_policy(inst.mdp, u).actions() == 0)

    def test_greedy_identity(self):
        rng = np.random.default_rng(38)
        for _ in range(10):
            mdp = random_mdp(rng, 5, 4)
            for kind in Kind:
                u = ValueFn(kind, random_values(rng, mdp, kind))
                pol = greedy_policy(mdp, u)
                lhs = Operator(mdp, Mode.CONSISTENCY, kind, pol).apply_values(u.values)
                rhs = Operator(mdp, Mode.OPTIMALITY, kind).apply_values(u.values)
                np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_anti_greedy_identity(self):
        rng = np.random.default_rng(39)
        for _ in range(10):
            mdp = random_mdp(rng, 5, 4)
            for kind in Kind:
                u = ValueFn(kind, random_values(rng, mdp, kind))
                pol = anti_greedy_policy(mdp, u)
                lhs = Operator(mdp, Mode.CONSISTENCY, kind, pol).apply_values(u.values)
                rhs = Operator(mdp, Mode.ANTI_OPTIMALITY, kind).apply_values(u.values)
                np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_dominated_action_chosen_by_anti(self):
        # both actions share dynamics; action 0 strictly out-pays action 1
        t = np.tile(np.eye(3).reshape(3, 1, 3), (1, 2, 1))
        r = np.column_stack([np.ones(3), np.zeros(3)])
        mdp = Mdp(3, 2, t, r, 0.9)
        u = ValueFn.zeros(mdp, Kind.STATE_VALUE)
        assert np.all(greedy_policy(mdp, u).actions() == 0)
        assert np.all(anti_greedy_policy(mdp, u).actions() == 1)

    def test_tie_breaks_to_smallest_index(self):
        t = np.tile(np.eye(2).reshape(2, 1, 2), (1, 3, 1))
        mdp = Mdp(2, 3, t, np.ones((2, 3)), 0.9)
        u = ValueFn.zeros(mdp, Kind.STATE_VALUE)
        assert np.all(greedy_policy(mdp, u).actions() == 0)
        assert np.all(anti_greedy_policy(mdp, u).actions() == 0)


class TestBellmanError:
    def test_zero_at_fixed_point(self):
        rng = np.random.default_rng(40)
        mdp = random_mdp(rng, 5, 3)
        op = Operator(mdp, Mode.OPTIMALITY, Kind.STATE_VALUE)
        fp = fixed_point(op, tol=1e-13)
        assert bellman_error(op, fp) <= 1e-13

    def test_hard_gamma_one_start_error(self):
        inst = build_hard(4, 1.0)
        op = Operator(inst.mdp, Mode.OPTIMALITY, Kind.STATE_VALUE)
        assert bellman_error(op, inst.u0) == 1.0

    def test_matches_loop_residual(self):
        rng = np.random.default_rng(41)
        mdp = random_mdp(rng, 4, 2)
        op = Operator(mdp, Mode.OPTIMALITY, Kind.STATE_VALUE)
        u = random_values(rng, mdp, Kind.STATE_VALUE)
        expect = max(
            abs(a - b) for a, b in zip(oracle_optimality(mdp, u, "v"), u)
        )
        assert bellman_error(op, ValueFn("v", u)) == pytest.approx(expect, abs=1e-12)


class TestFixedPoint:
    def test_hard_mdp_analytic(self):
        inst = build_hard(4, 0.9)
        op = Operator(inst.mdp, Mode.OPTIMALITY, Kind.STATE_VALUE)
        fp = fixed_point(op)
        np.testing.assert_allclose(fp.values, [0.0, 1.0, 0.9, 0.81], atol=1e-10)

    def test_zero_rewards(self):
        rng = np.random.default_rng(42)
        base = random_mdp(rng, 4, 2)
        mdp = Mdp(4, 2, base.transitions, np.zeros((4, 2)), 0.9)
        fp = fixed_point(Operator(mdp, Mode.OPTIMALITY, Kind.STATE_VALUE))
        assert np.allclose(fp.values, 0.0, atol=1e-12)

    def test_direct_solve_agrees_with_banach(self):
        rng = np.random.default_rng(43)
        tol = 1e-12
        for kind in Kind:
            mdp = random_mdp(rng, 6, 2, gamma=0.8)
            pol = random_policy(rng, mdp)
            op = Operator(mdp, Mode.CONSISTENCY, kind, pol)
            direct = fixed_point(op, tol=tol)
            banach = ValueFn(kind, _banach_reference(op, tol))
            assert sup_norm_diff(direct, banach) <= 10 * tol / (1 - mdp.gamma)

    def test_gs_shares_fixed_point_with_plain(self):
        rng = np.random.default_rng(44)
        for kind in Kind:
            mdp = random_mdp(rng, 5, 3, gamma=0.9)
            fp_plain = fixed_point(Operator(mdp, Mode.OPTIMALITY, kind), tol=1e-13)
            fp_gs = fixed_point(Operator(mdp, Mode.GS_OPTIMALITY, kind), tol=1e-13)
            assert sup_norm_diff(fp_plain, fp_gs) <= 1e-10

    def test_anti_fixed_point_below_optimal(self):
        rng = np.random.default_rng(45)
        for _ in range(5):
            mdp = random_mdp(rng, 5, 3, gamma=0.9)
            fp = fixed_point(Operator(mdp, Mode.OPTIMALITY, Kind.STATE_VALUE), tol=1e-12)
            anti = fixed_point(Operator(mdp, Mode.ANTI_OPTIMALITY, Kind.STATE_VALUE), tol=1e-12)
            assert np.all(anti.values <= fp.values + 1e-10)

    def test_anti_refused_at_gamma_one(self):
        inst = build_hard(4, 1.0)
        op = Operator(inst.mdp, Mode.ANTI_OPTIMALITY, Kind.STATE_VALUE)
        with pytest.raises(BadGamma):
            fixed_point(op, start=inst.u0)

    def test_gamma_one_needs_monotone_start(self):
        inst = build_hard(4, 1.0)
        op = Operator(inst.mdp, Mode.OPTIMALITY, Kind.STATE_VALUE)
        with pytest.raises(ConfigMismatch):
            fixed_point(op)
        # u_2 > (Tu)_2 = 1, so the monotone-start requirement fails
        bad = ValueFn(Kind.STATE_VALUE, np.array([0.0, 5.0, 0.0, 0.0]))
        with pytest.raises(ConfigMismatch):
            fixed_point(op, start=bad)


def _banach_reference(op, tol):
    x = np.zeros(op.length)
    for _ in range(10**6):
        tx = op.apply_values(x)
        if np.max(np.abs(tx - x)) <= tol:
            return tx
        x = tx
    raise AssertionError("reference iteration did not converge")


class TestOperatorProperties:
    def test_contraction_all_modes(self):
        rng = np.random.default_rng(46)
        for gamma in (0.3, 0.9):
            for mode in ALL_MODES:
                for _ in range(20):
                    mdp = random_mdp(rng, 4, 3, gamma)
                    kind = Kind.STATE_VALUE if rng.integers(2) else Kind.STATE_ACTION_VALUE
                    op = make_operator(rng, mdp, mode, kind)
                    u = random_values(rng, mdp, kind)
                    w = random_values(rng, mdp, kind)
                    lhs = np.max(np.abs(op.apply_values(u) - op.apply_values(w)))
                    assert lhs <= gamma * np.max(np.abs(u - w)) + 1e-12

    def test_monotonicity_all_modes(self):
        rng = np.random.default_rng(47)
        for mode in ALL_MODES:
            for _ in range(20):
                mdp = random_mdp(rng, 4, 3, 0.9)
                kind = Kind.STATE_VALUE if rng.integers(2) else Kind.STATE_ACTION_VALUE
                op = make_operator(rng, mdp, mode, kind)
                u = random_values(rng, mdp, kind)
                w = u + np.abs(rng.normal(size=u.size))
                assert np.all(op.apply_values(u) <= op.apply_values(w) + 1e-12)

    def test_order_anti_below_consistency_below_optimality(self):
        rng = np.random.default_rng(48)
        for _ in range(10):
            mdp = random_mdp(rng, 4, 3, 0.9)
            for kind in Kind:
                u = random_values(rng, mdp, kind)
                pol = random_policy(rng, mdp)
                anti = Operator(mdp, Mode.ANTI_OPTIMALITY, kind).apply_values(u)
                cons = Operator(mdp, Mode.CONSISTENCY, kind, pol).apply_values(u)
                opt = Operator(mdp, Mode.OPTIMALITY, kind).apply_values(u)
                assert np.all(anti <= cons + 1e-12)
                assert np.all(cons <= opt + 1e-12)

    def test_nonexpansive_at_gamma_one(self):
        rng = np.random.default_rng(49)
        for mode in ALL_MODES:
            for _ in range(10):
                mdp = random_mdp(rng, 4, 3, 1.0)
                kind = Kind.STATE_VALUE
                op = make_operator(rng, mdp, mode, kind)
                u = random_values(rng, mdp, kind)
                w = random_values(rng, mdp, kind)
                lhs = np.max(np.abs(op.apply_values(u) - op.apply_values(w)))
                assert lhs <= np.max(np.abs(u - w)) + 1e-12
