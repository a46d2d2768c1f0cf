import dataclasses
import math
import os
import tempfile
import unittest

import numpy as np
import numpy.testing as npt
import pandas as pd
from scipy import special

from src.core.errors import NumericalError, ValidationError
from src.theory.bellman import (causal_bellman, causal_soft_value, greedy_backup, soft_bellman, solve_qstar,
                                value_from_entropy_identity)
from src.theory.checks import (check_contraction, check_convergence_time, check_entropy_bound,
                               check_entropy_convexity, check_error_decay, check_finite_time_bound,
                               check_qstar_bounds, convergence_time_cap, entropy_bias, finite_time_rhs,
                               run_verification_suite, write_bound_reports)
from src.theory.toy_mdp import ToyMdp, random_toy_mdp


def hand_mdp(**overrides):
    values = dict(
        transition=np.array([[[0.7, 0.3], [0.2, 0.8]], [[0.5, 0.5], [1.0, 0.0]]]),
        reward=np.array([[0.5, -0.25], [1.0, 0.0]]),
        gamma=0.5,
        mask=np.array([[1, 0], [1, 1]]),
        policy=np.array([[0.5, 0.5], [0.25, 0.75]]),
        tau=2.0,
    )
    values.update(overrides)
    return ToyMdp(**values)


def single_action_mask(mdp):
    mask = np.zeros_like(mdp.mask)
    mask[:, 0] = 1
    return dataclasses.replace(mdp, mask=mask)


class TestToyMdp(unittest.TestCase):

    def test_random_mdp_is_valid(self):
        mdp = random_toy_mdp(5, 3, seed=1)
        self.assertEqual((mdp.n_states, mdp.n_actions), (5, 3))
        npt.assert_allclose(mdp.transition.sum(axis=2), 1.0)
        self.assertTrue(np.all(mdp.admissible_counts >= 1))

    def test_rejects_bad_transition_rows(self):
        with self.assertRaises(ValidationError):
            hand_mdp(transition=np.full((2, 2, 2), 0.4))

    def test_rejects_large_rewards(self):
        with self.assertRaises(ValidationError):
            hand_mdp(reward=np.array([[2.0, 0.0], [0.0, 0.0]]))

    def test_rejects_state_without_admissible_action(self):
        with self.assertRaises(ValidationError):
            hand_mdp(mask=np.array([[0, 0], [1, 1]]))

    def test_rejects_gamma_one(self):
        with self.assertRaises(ValidationError):
            hand_mdp(gamma=1.0)


class TestBellman(unittest.TestCase):

    def setUp(self):
        self.q = np.array([[1.0, 2.0], [3.0, 4.0]])

    def test_zero_discount_returns_reward(self):
        mdp = hand_mdp(gamma=0.0)
        npt.assert_array_equal(causal_bellman(self.q, mdp), mdp.reward)

    def test_zero_mask_is_expected_sarsa(self):
        mdp = hand_mdp()
        expected = mdp.reward + mdp.gamma * mdp.transition @ np.sum(mdp.policy * self.q, axis=1)
        npt.assert_allclose(causal_bellman(self.q, mdp, mask=np.zeros((2, 2))), expected, atol=1e-14)

    def test_hand_summation(self):
        mdp = hand_mdp()
        expected = np.zeros((2, 2))
        for s in range(2):
            for a in range(2):
                total = 0.0
                for s2 in range(2):
                    value = sum(mdp.policy[s2, b] * self.q[s2, b] for b in range(2))
                    entropy = -sum(mdp.mask[s2, b] * mdp.policy[s2, b] * math.log(mdp.policy[s2, b])
                                   for b in range(2))
                    total += mdp.transition[s, a, s2] * (value - mdp.tau * entropy)
                expected[s, a] = mdp.reward[s, a] + mdp.gamma * total
        npt.assert_allclose(causal_bellman(self.q, mdp), expected, atol=1e-14)

    def test_softmax_policy_flag(self):
        mdp = hand_mdp(softmax_policy=True)
        fixed = hand_mdp(policy=special.softmax(self.q / mdp.tau, axis=1))
        npt.assert_allclose(causal_bellman(self.q, mdp), causal_bellman(self.q, fixed), atol=1e-14)

    def test_soft_value_matches_entropy_identity(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            mdp = random_toy_mdp(6, 4, seed, tau=0.7)
            q = rng.normal(size=(6, 4)) * 3
            npt.assert_allclose(value_from_entropy_identity(q, mdp), causal_soft_value(q, mdp), atol=1e-10)

    def test_single_admissible_action_value(self):
        mdp = single_action_mask(random_toy_mdp(4, 3, 2))
        q = np.arange(12, dtype=float).reshape(4, 3)
        npt.assert_allclose(causal_soft_value(q, mdp), q[:, 0], atol=1e-12)

    def test_rejects_non_finite_q(self):
        with self.assertRaises(ValidationError):
            causal_bellman(np.array([[np.nan, 0.0], [0.0, 0.0]]), hand_mdp())


class TestSolveQstar(unittest.TestCase):

    def test_zero_discount(self):
        mdp = hand_mdp(gamma=0.0)
        result = solve_qstar(mdp)
        npt.assert_array_equal(result.q, mdp.reward)
        self.assertLessEqual(result.iterations, 2)

    def test_zero_reward_is_bounded_by_entropy_bias(self):
        for seed in range(10):
            mdp = random_toy_mdp(5, 4, seed, gamma=0.8, tau=0.5)
            mdp = dataclasses.replace(mdp, reward=np.zeros_like(mdp.reward))
            q = solve_qstar(mdp).q
            self.assertGreaterEqual(q.min(), -1e-12)
            self.assertLessEqual(q.max(), entropy_bias(mdp) + 1e-10)

    def test_geometric_residual_decay(self):
        mdp = random_toy_mdp(6, 3, 4, gamma=0.9)
        residuals = solve_qstar(mdp).residuals
        for prev, cur in zip(residuals, residuals[1:]):
            self.assertLessEqual(cur, mdp.gamma * prev + 1e-12)

    def test_fixed_point(self):
        mdp = random_toy_mdp(4, 2, 5)
        result = solve_qstar(mdp)
        npt.assert_allclose(soft_bellman(result.q, mdp), result.q, atol=1e-10)
        npt.assert_allclose(result.v, causal_soft_value(result.q, mdp), atol=1e-10)

    def test_iteration_cap(self):
        with self.assertRaises(NumericalError):
            solve_qstar(random_toy_mdp(4, 2, 5, gamma=0.99), max_iter=3)


class TestContraction(unittest.TestCase):

    def test_random_mdp(self):
        mdp = random_toy_mdp(5, 3, 7)
        report = check_contraction(mdp, trials=1000, seed=1)
        self.assertEqual(report.checked, 1000)
        self.assertEqual(report.violations, 0)
        self.assertLessEqual(report.params["max_ratio"], mdp.gamma + 1e-12)

    def test_many_mdps(self):
        for seed in range(20):
            mdp = random_toy_mdp(1 + seed % 8, 1 + seed % 4, seed, gamma=0.95)
            self.assertTrue(check_contraction(mdp, trials=200, seed=seed).passed)

    def test_identical_pair(self):
        mdp = random_toy_mdp(3, 2, 0)
        q = np.ones((3, 2))
        self.assertEqual(np.max(np.abs(causal_bellman(q, mdp) - causal_bellman(q.copy(), mdp))), 0.0)

    def test_needs_fixed_policy(self):
        with self.assertRaises(ValidationError):
            check_contraction(random_toy_mdp(3, 2, 0, softmax_policy=True))


class TestQstarBounds(unittest.TestCase):

    def test_random_mdps(self):
        for seed in range(50):
            mdp = random_toy_mdp(6, 4, seed)
            report = check_qstar_bounds(mdp, solve_qstar(mdp), iterates=10)
            self.assertEqual(report.violations, 0, f"seed {seed}")

    def test_single_admissible_action_collapses_bounds(self):
        mdp = single_action_mask(random_toy_mdp(5, 3, 3))
        q = solve_qstar(mdp).q
        npt.assert_allclose(q, greedy_backup(q, mdp), atol=1e-9)
        self.assertEqual(entropy_bias(mdp), 0.0)
        self.assertTrue(check_qstar_bounds(mdp, solve_qstar(mdp)).passed)

    def test_causal_bias_is_tighter(self):
        mdp = random_toy_mdp(6, 4, 8)
        mdp = dataclasses.replace(mdp, mask=np.tile([1, 1, 0, 0], (6, 1)))
        report = check_qstar_bounds(mdp, solve_qstar(mdp))
        self.assertLess(report.params["causal_bias"], report.params["non_causal_bias"])


class TestErrorDecay(unittest.TestCase):

    def test_random_mdps(self):
        for seed in range(20):
            mdp = random_toy_mdp(2 + seed % 7, 2 + seed % 3, seed)
            report = check_error_decay(mdp, solve_qstar(mdp), t_max=200)
            self.assertEqual(report.violations, 0, f"seed {seed}")
            self.assertEqual(report.checked, 201)

    def test_without_bias_decays_to_zero(self):
        mdp = single_action_mask(random_toy_mdp(4, 3, 9))
        qstar = solve_qstar(mdp)
        report = check_error_decay(mdp, qstar, t_max=50)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.params["limit_error"], 1e-10)


class TestConvergenceTime(unittest.TestCase):

    def setUp(self):
        self.mdp = random_toy_mdp(5, 3, 12, gamma=0.8)
        self.qstar = solve_qstar(self.mdp)
        self.bias = entropy_bias(self.mdp)

    def test_rejects_eps_below_bias(self):
        with self.assertRaises(ValidationError):
            check_convergence_time(self.mdp, self.qstar, [self.bias])

    def test_times_within_cap(self):
        eps_grid = [self.bias + f for f in (1.0, 1e-2, 1e-4, 1e-6)]
        report = check_convergence_time(self.mdp, self.qstar, eps_grid)
        self.assertEqual(report.checked, 4)
        self.assertEqual(report.violations, 0)

    def test_large_eps_needs_no_step(self):
        eps = self.bias + np.max(np.abs(self.qstar.q)) + 1.0
        report = check_convergence_time(self.mdp, self.qstar, [eps])
        self.assertEqual(report.params["times"], f"{eps:g}:0")

    def test_halving_gap_adds_log_two_steps(self):
        gamma, d0, bias = 0.9, 5.0, 1.0
        step = math.log(2) / math.log(1 / gamma)
        for gap in (1e-1, 1e-2, 1e-3):
            longer = convergence_time_cap(bias + gap / 2, bias, d0, gamma)
            shorter = convergence_time_cap(bias + gap, bias, d0, gamma)
            self.assertGreaterEqual(longer - shorter, math.floor(step))
            self.assertLessEqual(longer - shorter, math.ceil(step))

    def test_cap_rejects_eps_at_bias(self):
        with self.assertRaises(ValidationError):
            convergence_time_cap(1.0, 1.0, 2.0, 0.9)


class TestFiniteTime(unittest.TestCase):

    def rhs(self, t, log_mask_sum=math.log(2)):
        return finite_time_rhs(t, alpha=0.1, gamma=0.8, omega_min=0.1, omega_max=0.25, n_pairs=6,
                               log_mask_sum=log_mask_sum, tau=1.0)

    def test_rejects_zero_omega(self):
        with self.assertRaises(ValidationError):
            finite_time_rhs(10, 0.1, 0.8, 0.0, 0.2, 6, 0.0, 1.0)

    def test_transient_term_vanishes(self):
        self.assertLess(self.rhs(100000).transient, 1e-12)
        self.assertLess(self.rhs(100000).transient, self.rhs(100).transient)

    def test_causal_term_below_non_causal(self):
        causal, non_causal = self.rhs(100, math.log(2)), self.rhs(100, math.log(4))
        self.assertLess(causal.causal, non_causal.causal)
        self.assertLess(causal.total, non_causal.total)

    def test_monte_carlo_below_rhs(self):
        mdp = random_toy_mdp(3, 2, 21, gamma=0.8)
        report = check_finite_time_bound(mdp, alpha_lr=0.1, t_max=1000, trials=200, seed=3)
        self.assertEqual(report.checked, 3)
        self.assertEqual(report.violations, 0)
        self.assertGreater(report.params["omega_min"], 0.0)

    def test_unsampled_pairs_rejected(self):
        mdp = random_toy_mdp(3, 2, 21)
        with self.assertRaises(ValidationError) as ctx:
            check_finite_time_bound(mdp, trials=2, t_points=[1])
        self.assertIn("omega_min = 0", str(ctx.exception))


class TestEntropyChecks(unittest.TestCase):

    def test_convexity(self):
        report = check_entropy_convexity(n_actions=5, samples=10000, seed=1)
        self.assertEqual(report.checked, 10000)
        self.assertEqual(report.violations, 0)

    def test_bounds(self):
        report = check_entropy_bound(n_actions=6, samples=10000, seed=2)
        self.assertEqual(report.checked, 30000)
        self.assertEqual(report.violations, 0)


class TestSuite(unittest.TestCase):

    def test_small_suite_passes(self):
        reports = run_verification_suite(n_mdps=2, seed=5, contraction_trials=50, t_max=50, finite_trials=20)
        self.assertEqual([r.name for r in reports],
                         ["contraction", "qstar_bounds", "error_decay", "convergence_time", "finite_time",
                          "entropy_convexity", "entropy_bound"])
        self.assertTrue(all(r.passed for r in reports))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "verify.csv")
            write_bound_reports(reports, path)
            frame = pd.read_csv(path)
        self.assertEqual(len(frame), 7)
        self.assertTrue(frame["passed"].all())

    def test_finite_time_runs_on_every_mdp(self):
        reports = {r.name: r for r in run_verification_suite(n_mdps=20, seed=8, contraction_trials=10, t_max=20,
                                                             finite_trials=200)}
        finite = reports["finite_time"]
        self.assertEqual(finite.params["runs"], 20)
        self.assertEqual(finite.checked, 3 * 20)
        self.assertEqual(finite.violations, 0)


if __name__ == "__main__":
    unittest.main()
