"""
Tests for the transport / Brownian motion coupling
"""
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate, stats

from simulation.coupling import (
    CoupledBmPair,
    bm_rate_experiment,
    bm_replica_distance,
    bridge_fill,
    couple_bm,
    gaussian_score,
    levy_skeleton,
    refine_pair,
    skeleton_levels,
    skeleton_scores,
    sup_distance,
    transition_log_density,
    uniform_grid,
)
from simulation.exceptions import ConfigurationError
from simulation.rates import fit_rate
from simulation.rng import StreamPurpose, derive_stream
from simulation.transport import TelegraphPath, build_telegraph, eval_transport_grid


def thread_map(function, arguments):
    with ThreadPoolExecutor(max_workers=4) as pool:
        return list(pool.map(lambda args: function(*args), arguments))


def coupled(n, replica, seed=17, grid_size=65):
    base = derive_stream(seed, [n, replica])
    path = build_telegraph(n, base.derive(StreamPurpose.TRANSPORT))
    return couple_bm(path, base, uniform_grid(grid_size))


def pooled_scores(n, replicas, seed=23):
    scores = []
    for replica in range(replicas):
        base = derive_stream(seed, [n, replica])
        path = build_telegraph(n, base.derive(StreamPurpose.TRANSPORT))
        _, lower, _ = skeleton_scores(path, skeleton_levels(n), base.derive(StreamPurpose.COUPLING))
        scores.append(lower[1:])
    return np.concatenate(scores)


class TransitionDensityTests(SimpleTestCase):
    def mass(self, length, start, end, weight=lambda x: 1.0):
        value, _ = integrate.quad(
            lambda x: weight(x) * float(np.exp(transition_log_density(x, length, start, end))),
            -length, length, epsabs=1e-12, epsrel=1e-10, limit=200)
        return value

    def test_masses_by_final_heading(self):
        for length in (0.3, 1.5, 6.0):
            self.assertAlmostEqual(self.mass(length, 1.0, 1.0), math.exp(-length) * (math.cosh(length) - 1.0),
                                   places=9)
            self.assertAlmostEqual(self.mass(length, 1.0, -1.0), math.exp(-length) * math.sinh(length), places=9)
            self.assertAlmostEqual(self.mass(length, -1.0, -1.0), self.mass(length, 1.0, 1.0), places=12)

    def test_mean_position(self):
        length = 2.0
        continuous = sum(self.mass(length, 1.0, end, weight=lambda x: x) for end in (1.0, -1.0))
        self.assertAlmostEqual(continuous + length * math.exp(-length), 0.5 * (1.0 - math.exp(-2.0 * length)),
                               places=9)

    def test_zero_outside_the_light_cone(self):
        self.assertEqual(float(transition_log_density(2.5, 2.0, 1.0, -1.0)), -np.inf)

    def test_long_horizon_is_gaussian_at_the_centre(self):
        length = 1e4
        density = math.exp(float(np.logaddexp(transition_log_density(0.0, length, 1.0, 1.0),
                                              transition_log_density(0.0, length, 1.0, -1.0))))
        self.assertAlmostEqual(density * math.sqrt(2.0 * math.pi * (length - 0.5)), 1.0, delta=1e-3)


class SkeletonTests(SimpleTestCase):
    def test_levels_give_cells_of_at_most_four_units(self):
        self.assertEqual(skeleton_levels(4), 0)
        self.assertEqual(skeleton_levels(64), 4)
        self.assertEqual(skeleton_levels(100), 5)
        self.assertEqual(skeleton_levels(1), 0)

    def test_gaussian_score(self):
        self.assertEqual(float(gaussian_score(0.5, 0.5)), 0.0)
        self.assertAlmostEqual(float(gaussian_score(0.025, 0.975)), -1.959963984540054, places=9)
        self.assertAlmostEqual(float(gaussian_score(1.0 - 1e-20, 1e-20)), 9.262340089798408, places=4)

    def test_levy_construction(self):
        values = levy_skeleton(1, np.array([0.0, 0.4, -1.0]))
        np.testing.assert_allclose(values, [0.0, -0.5 + 0.5 * 0.4, -1.0])

    def test_scores_are_uniform(self):
        for n, replicas in ((64, 250), (4096, 8)):
            scores = pooled_scores(n, replicas)
            self.assertTrue(np.all((scores >= 0.0) & (scores <= 1.0)))
            self.assertGreater(stats.kstest(scores, 'uniform').pvalue, 1e-3, n)

    def test_straight_path_scores(self):
        path = TelegraphPath(n=16, sign=1, events=np.array([]))
        times, lower, upper = skeleton_scores(path, 2, derive_stream(4, [0]))
        np.testing.assert_allclose(times, [0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(lower + upper, 1.0)
        self.assertLess(lower[-1], 1.0)
        self.assertGreater(lower[-1], 1.0 - 2.0 * math.exp(-16.0))


class BridgeFillTests(SimpleTestCase):
    def test_anchor_values_are_reproduced(self):
        anchors = np.array([0.0, 0.2, 0.5, 0.9])
        values = np.array([0.0, 1.0, -0.5, 0.25])
        filled = bridge_fill(anchors, values, anchors, derive_stream(1, [2]))
        np.testing.assert_allclose(filled, values, atol=1e-15)

    def test_bridge_variance_at_midpoint(self):
        anchors = np.array([0.0, 1.0])
        samples = [bridge_fill(anchors, np.zeros(2), np.array([0.5]), derive_stream(2, [k]))[0]
                   for k in range(4000)]
        self.assertAlmostEqual(np.var(samples), 0.25, delta=0.025)


class CoupleBmTests(SimpleTestCase):
    def test_grid_on_the_skeleton_keeps_node_values(self):
        pair = coupled(256, 0)
        self.assertEqual(pair.skeleton_times.size, 65)
        np.testing.assert_allclose(pair.bm_values, pair.skeleton_values, atol=1e-12)

    def test_bm_is_standard_at_time_one(self):
        ends = np.array([coupled(256, replica).bm_values[-1] for replica in range(400)])
        self.assertLess(abs(ends.mean()), 4.0 / math.sqrt(400))
        self.assertAlmostEqual(ends.var(), 1.0, delta=0.3)

    def test_grid_increments_are_standard_normal(self):
        samples = []
        for replica in range(40):
            pair = coupled(256, replica, seed=31, grid_size=257)
            samples.append(np.diff(pair.bm_values) / np.sqrt(np.diff(pair.t_grid)))
        self.assertGreater(stats.kstest(np.concatenate(samples), 'norm').pvalue, 1e-3)

    def test_grid_must_contain_endpoints(self):
        path = build_telegraph(64, derive_stream(1, [0]))
        with self.assertRaises(ConfigurationError):
            couple_bm(path, derive_stream(1, [1]), [0.0, 0.5])
        with self.assertRaises(ConfigurationError):
            couple_bm(path, derive_stream(1, [1]), [0.0, 0.6, 0.5, 1.0])

    def test_degenerate_pair_has_zero_distance(self):
        path = build_telegraph(64, derive_stream(1, [0]))
        self.assertEqual(sup_distance(CoupledBmPair.from_transport(path, uniform_grid(17))), 0.0)

    def test_refinement_never_decreases_distance(self):
        pair = coupled(1024, 2)
        refined = refine_pair(pair, 4, derive_stream(17, [1024, 2, StreamPurpose.REFINE]))
        self.assertEqual(refined.t_grid.size, 4 * (pair.t_grid.size - 1) + 1)
        np.testing.assert_array_equal(refined.bm_values[::4], pair.bm_values)
        self.assertGreaterEqual(sup_distance(refined), sup_distance(pair))

    def test_invalid_refinement_rejected(self):
        with self.assertRaises(ConfigurationError):
            refine_pair(coupled(64, 0), 0, derive_stream(1, [0]))

    def test_distance_covers_grid_points(self):
        pair = coupled(256, 3)
        grid_gap = np.max(np.abs(eval_transport_grid(pair.path, pair.t_grid) - pair.bm_values))
        self.assertGreaterEqual(sup_distance(pair), grid_gap)


class BmRateTests(SimpleTestCase):
    def test_median_distance_decays_like_a_square_root(self):
        rows = bm_rate_experiment([2 ** 8, 2 ** 11, 2 ** 14], 80, 5, grid_size=129, mapper=thread_map)
        fit = fit_rate([(row.n, row.median) for row in rows])
        self.assertGreaterEqual(fit.slope, -0.65)
        self.assertLessEqual(fit.slope, -0.35)

    def test_refined_replica_distance(self):
        base = bm_replica_distance(512, 1, 5, 65)
        refined = bm_replica_distance(512, 1, 5, 65, refine=4)
        self.assertGreaterEqual(refined, base)

    def test_experiment_is_deterministic_and_thread_independent(self):
        serial = bm_rate_experiment([64, 128, 256], 12, 7, grid_size=33)
        threaded = bm_rate_experiment([64, 128, 256], 12, 7, grid_size=33, mapper=thread_map)
        self.assertEqual(serial, threaded)
        for row in serial:
            self.assertLessEqual(row.median, row.q90)
            self.assertLessEqual(row.q90, row.q99)

    def test_invalid_arguments_rejected(self):
        with self.assertRaises(ConfigurationError):
            bm_rate_experiment([256, 128], 4, 1)
        with self.assertRaises(ConfigurationError):
            bm_rate_experiment([], 4, 1)
        with self.assertRaises(ConfigurationError):
            bm_rate_experiment([64], 4, 1, refine=0)
