"""
Tests for the strip construction of the coupled sheet pair
"""
import math

import numpy as np
from django.test import SimpleTestCase

from simulation.coupling import uniform_grid
from simulation.exceptions import ConfigurationError
from simulation.rng import derive_stream
from simulation.sheet import (
    SheetConfig,
    auxiliary_sheet,
    build_sheet_pair,
    covariance_check,
    error_decomposition,
    interp_Wn,
    interpolated_covariance,
    interpolation_bound,
    sheet_covariance,
    sheet_replica_record,
    substrip_motions,
    sup_error,
)
from simulation.transport import strip_increment


def small_config(n=256, m=4):
    return SheetConfig(n=n, lam=0.19, m=m, t_grid_size=33)


class SheetConfigTests(SimpleTestCase):
    def test_strip_count(self):
        self.assertEqual(SheetConfig(n=2 ** 10).strips, 3)
        self.assertEqual(SheetConfig(n=2 ** 14).strips, 6)
        self.assertEqual(SheetConfig(n=2 ** 16).strips, 8)

    def test_lambda_outside_range_names_the_constraint(self):
        with self.assertRaisesMessage(ConfigurationError, '(0, 1/5)'):
            SheetConfig(n=1024, lam=0.3)
        with self.assertRaises(ConfigurationError):
            SheetConfig(n=1024, lam=0.0)

    def test_invalid_sizes_rejected(self):
        with self.assertRaises(ConfigurationError):
            SheetConfig(n=1024, m=0)
        with self.assertRaises(ConfigurationError):
            SheetConfig(n=0)

    def test_dict_round_trip(self):
        config = small_config()
        self.assertEqual(SheetConfig.from_dict(config.as_dict()), config)


class SubstripTests(SimpleTestCase):
    def test_substrips_reconstruct_the_strip_motion(self):
        t_grid = uniform_grid(33)
        strip = np.cumsum(np.concatenate([[0.0], derive_stream(1, [0]).standard_normal(32)])) / math.sqrt(32)
        for m in (3, 4, 8):
            motions = substrip_motions(strip, derive_stream(1, [1]), m, t_grid)
            self.assertEqual(motions.shape, (m, 33))
            np.testing.assert_allclose(motions.sum(axis=0) / math.sqrt(m), strip, atol=1e-12)

    def test_dyadic_auxiliary_sheets_are_nested(self):
        t_grid = uniform_grid(17)
        coarse = auxiliary_sheet(derive_stream(4, [2]), 4, t_grid)
        fine = auxiliary_sheet(derive_stream(4, [2]), 8, t_grid)
        np.testing.assert_allclose(fine[::2], coarse, atol=1e-14)

    def test_substrip_motions_are_standard_and_uncorrelated(self):
        t_grid = uniform_grid(3)
        ends = []
        for replica in range(3000):
            strip = np.array([0.0, 0.0, derive_stream(8, [replica, 0]).standard_normal()])
            ends.append(substrip_motions(strip, derive_stream(8, [replica, 1]), 4, t_grid)[:, -1])
        ends = np.array(ends)
        np.testing.assert_allclose(ends.var(axis=0), 1.0, atol=0.12)
        self.assertLess(abs(np.mean(ends[:, 0] * ends[:, 1])), 0.12)


class SheetPairTests(SimpleTestCase):
    def setUp(self):
        self.config = small_config()
        self.grid = build_sheet_pair(self.config, derive_stream(3, [self.config.n, 0]))

    def test_grid_shapes(self):
        strips, m = self.config.strips, self.config.m
        self.assertEqual(strips, 2)
        self.assertEqual(self.grid.s_grid.size, strips * m + 2)
        self.assertEqual(self.grid.w_values.shape, (strips * m + 2, 33))
        self.assertEqual(self.grid.wn_strip_values.shape, (strips + 1, 33))
        self.assertEqual(self.grid.s_grid[-1], 1.0)

    def test_both_legs_vanish_on_the_axes(self):
        np.testing.assert_array_equal(self.grid.w_values[0], 0.0)
        np.testing.assert_array_equal(self.grid.wn_values[0], 0.0)
        np.testing.assert_allclose(self.grid.w_values[:, 0], 0.0, atol=1e-15)
        np.testing.assert_allclose(self.grid.wn_values[:, 0], 0.0, atol=1e-15)

    def test_remainder_strip_is_frozen(self):
        np.testing.assert_array_equal(self.grid.w_values[-1], self.grid.w_values[-2])
        np.testing.assert_array_equal(self.grid.wn_values[-1], self.grid.wn_strip_values[-1])

    def test_interpolation_at_strip_points_and_beyond(self):
        h = self.config.strip_width
        column = 16
        t = self.grid.t_grid[column]
        self.assertAlmostEqual(interp_Wn(self.grid, h, t), self.grid.wn_strip_values[1, column], places=12)
        self.assertAlmostEqual(interp_Wn(self.grid, 1.0, t), self.grid.wn_strip_values[-1, column], places=12)
        midpoint = 0.5 * (self.grid.wn_strip_values[0, column] + self.grid.wn_strip_values[1, column])
        self.assertAlmostEqual(interp_Wn(self.grid, 0.5 * h, t), midpoint, places=12)

    def test_interpolation_off_grid_rejected(self):
        with self.assertRaises(ConfigurationError):
            interp_Wn(self.grid, 0.5, 0.123456)
        with self.assertRaises(ConfigurationError):
            interp_Wn(self.grid, 1.5, 0.5)

    def test_strip_points_add_strip_increments(self):
        for l, pair in enumerate(self.grid.strip_pairs, start=1):
            increment = strip_increment(pair.path, self.config.lam, self.grid.t_grid)
            np.testing.assert_allclose(self.grid.wn_strip_values[l] - self.grid.wn_strip_values[l - 1], increment,
                                       atol=1e-12)
            np.testing.assert_allclose(self.grid.w_strip_values[l] - self.grid.w_strip_values[l - 1],
                                       self.config.n ** (-self.config.lam / 2.0) * pair.bm_values, atol=1e-12)

    def test_sup_error_matches_recomputation_from_strip_paths(self):
        config, grid = self.config, self.grid
        scale = config.n ** (-config.lam / 2.0)
        rows = np.vstack([np.zeros(grid.t_grid.size)]
                         + [scale * pair.path.values(grid.t_grid) for pair in grid.strip_pairs])
        rows = np.cumsum(rows, axis=0)
        worst = 0.0
        for i, s in enumerate(grid.s_grid):
            position = s * config.n ** config.lam
            if position >= config.strips - 1e-9:
                wn = rows[config.strips]
            else:
                left = int(math.floor(position + 1e-9))
                frac = max(position - left, 0.0)
                wn = (1.0 - frac) * rows[left] + frac * rows[left + 1]
            worst = max(worst, float(np.max(np.abs(wn - grid.w_values[i]))))
        self.assertAlmostEqual(sup_error(grid), worst, places=9)

    def test_strip_point_variance(self):
        h = self.config.strip_width
        grids = [build_sheet_pair(self.config, derive_stream(41, [self.config.n, replica])) for replica in range(400)]
        ends = np.array([grid.w_strip_values[:, -1] for grid in grids])
        for l in range(1, self.config.strips + 1):
            self.assertAlmostEqual(ends[:, l].var() / (l * h), 1.0, delta=0.25)

    def test_decompositions_bound_the_errors(self):
        for replica in range(5):
            grid = build_sheet_pair(self.config, derive_stream(3, [self.config.n, replica]))
            parts = error_decomposition(grid)
            p11, p12, p13 = interpolation_bound(grid)
            self.assertLessEqual(sup_error(grid), parts.total + 1e-12)
            self.assertLessEqual(parts.p1, p11 + p12 + p13 + 1e-12)

    def test_refining_substrips_never_decreases_sup_error(self):
        stream = derive_stream(12, [1024, 0])
        coarse = build_sheet_pair(SheetConfig(n=1024, m=4, t_grid_size=33), stream)
        fine = build_sheet_pair(SheetConfig(n=1024, m=8, t_grid_size=33), stream)
        self.assertGreaterEqual(sup_error(fine), sup_error(coarse) - 1e-12)
        np.testing.assert_allclose(fine.w_values[:-1:2], coarse.w_values[:-1], atol=1e-12)

    def test_replica_record_is_deterministic(self):
        first = sheet_replica_record(self.config.as_dict(), 4, 99)
        second = sheet_replica_record(self.config.as_dict(), 4, 99)
        self.assertEqual(first, second)
        self.assertEqual(len(first['strip_distances']), self.config.strips)
        self.assertLessEqual(first['sup_error'], first['p1'] + first['p2'] + first['p3'] + 1e-12)


class CovarianceTests(SimpleTestCase):
    def test_targets(self):
        config = small_config()
        self.assertAlmostEqual(sheet_covariance((0.3, 0.7), (0.6, 0.4)), 0.12)
        h = config.strip_width
        self.assertAlmostEqual(interpolated_covariance(config, (h, 0.5), (2 * h, 1.0)), h * 0.5)
        self.assertAlmostEqual(interpolated_covariance(config, (1.0, 1.0), (1.0, 1.0)), config.strips * h)

    def test_empirical_covariance_matches_interpolated_sheet(self):
        config = small_config()
        pairs = [((0.5, 0.5), (0.5, 0.5)), ((0.3, 0.7), (0.6, 0.4)), ((0.0, 0.5), (0.5, 0.5))]
        rows = covariance_check(config, 600, pairs, derive_stream(5, [config.n]))
        for row in rows[:2]:
            self.assertLess(abs(row.empirical - row.interpolated), 4.5 * row.stderr + 0.01)
        self.assertEqual(rows[2].empirical, 0.0)
        self.assertEqual(rows[2].exact, 0.0)

    def test_points_outside_square_rejected(self):
        with self.assertRaises(ConfigurationError):
            covariance_check(small_config(), 10, [((1.2, 0.5), (0.5, 0.5))], derive_stream(5, [1]))
