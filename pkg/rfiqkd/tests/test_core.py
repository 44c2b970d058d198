import math

import numpy as np
from django.test import SimpleTestCase

from rfiqkd.core import (TALLY_SHAPE, BasisLabel, ChannelParams, IntensityClass, IntensityLabel,
                         InvalidConfiguration, InvalidTallies, KeyRateReport, ObservedTallies,
                         ProtocolConfig, SecurityParams, StateLabel, binary_entropy, config_violations,
                         parse_label, validate_config)


def _intensities(mu=0.55, nu=0.28, omega=0.0, p=(0.54, 0.36, 0.10)):
    return (IntensityClass(IntensityLabel.MU, mu, p[0]),
            IntensityClass(IntensityLabel.NU, nu, p[1]),
            IntensityClass(IntensityLabel.OMEGA, omega, p[2]))


class ConfigValidationTest(SimpleTestCase):

    def test_defaults_are_valid(self):
        cfg, ch, sec = ProtocolConfig(), ChannelParams(), SecurityParams()
        self.assertEqual(validate_config(cfg, ch, sec), (cfg, ch, sec))
        self.assertAlmostEqual(cfg.p_x0, 0.115)
        self.assertAlmostEqual(cfg.p_y0, 0.115)

    def test_every_violation_is_reported(self):
        cfg = ProtocolConfig(intensities=_intensities(mu=0.2, p=(0.5, 0.36, 0.10)))
        with self.assertRaises(InvalidConfiguration) as ctx:
            validate_config(cfg, ChannelParams(beta=7.0), SecurityParams(f=0.9))
        fields = {v.field for v in ctx.exception.violations}
        self.assertTrue({'mu', 'p_mu+p_nu+p_omega', 'beta', 'f'} <= fields)
        self.assertIn('beta', str(ctx.exception))

    def test_violations_sorted_by_field(self):
        cfg = ProtocolConfig(intensities=_intensities(mu=0.2), p_z_bob=1.0, n_total=0)
        names = [v.field for v in config_violations(cfg, ChannelParams(), SecurityParams())]
        self.assertEqual(names, sorted(names))
        self.assertIn('p_z_bob', names)
        self.assertIn('n_total', names)

    def test_omega_above_nu_rejected(self):
        cfg = ProtocolConfig(intensities=_intensities(nu=0.1, omega=0.2))
        names = {v.field for v in config_violations(cfg, ChannelParams(), SecurityParams())}
        self.assertIn('omega', names)
        self.assertIn('nu', names)


class ObservedTalliesTest(SimpleTestCase):

    def _tallies(self):
        sent = np.full(TALLY_SHAPE, 100)
        n = np.full(TALLY_SHAPE, 10)
        m = np.full(TALLY_SHAPE, 1)
        return ObservedTallies(sent, n, m)

    def test_cells_and_sums(self):
        t = self._tallies()
        cell = t.cell(StateLabel.Y0, BasisLabel.X, IntensityLabel.NU)
        self.assertEqual((cell.sent, cell.n, cell.m), (100, 10, 1))
        np.testing.assert_array_equal(t.detections((StateLabel.Z0, StateLabel.Z1), BasisLabel.Z), [20, 20, 20])
        self.assertEqual(len(list(t.iter_cells())), 24)
        self.assertAlmostEqual(t.qber(StateLabel.Z0, BasisLabel.Z, IntensityLabel.MU), 0.1)
        self.assertEqual(ObservedTallies.total([t, t]), t + t)

    def test_immutable(self):
        t = self._tallies()
        with self.assertRaises(AttributeError):
            t.n = None
        with self.assertRaises(ValueError):
            t.n[0, 0, 0] = 5

    def test_errors_above_detections_name_the_cell(self):
        m = np.zeros(TALLY_SHAPE, dtype=int)
        m[1, 0, 2] = 11
        t = ObservedTallies(np.full(TALLY_SHAPE, 100), np.full(TALLY_SHAPE, 10), m)
        with self.assertRaises(InvalidTallies) as ctx:
            t.check()
        self.assertEqual(ctx.exception.cell, '(Z1,Z,omega)')

    def test_wrong_shape(self):
        with self.assertRaises(InvalidTallies):
            ObservedTallies(np.zeros((4, 3, 3)), np.zeros((4, 3, 3)), np.zeros((4, 3, 3)))


class BinaryEntropyTest(SimpleTestCase):

    def test_values(self):
        self.assertEqual(binary_entropy(0.0), 0.0)
        self.assertEqual(binary_entropy(1.0), 0.0)
        self.assertAlmostEqual(binary_entropy(0.5), 1.0)
        self.assertAlmostEqual(binary_entropy(0.11), 0.4999, places=3)

    def test_vectorised(self):
        np.testing.assert_allclose(binary_entropy([0.0, 0.5, 1.0]), [0.0, 1.0, 0.0])

    def test_out_of_range(self):
        with self.assertRaises(ValueError):
            binary_entropy(1.5)


class LabelTest(SimpleTestCase):

    def test_parse_label(self):
        self.assertEqual(parse_label(IntensityLabel, 'signal'), IntensityLabel.MU)
        self.assertEqual(parse_label(IntensityLabel, ' Omega '), IntensityLabel.OMEGA)
        self.assertEqual(parse_label(StateLabel, 'y0'), StateLabel.Y0)
        with self.assertRaises(ValueError):
            parse_label(StateLabel, 'X1')


class KeyRateReportTest(SimpleTestCase):

    def test_rate_and_rows(self):
        report = KeyRateReport(1.0, 2.0, 0.9, 0.1, 0.01, 10.0, 50.0, 1000, intermediate={'tau0': 0.5})
        report.add_flag('x')
        report.add_flag('x')
        self.assertAlmostEqual(report.key_rate, 0.05)
        self.assertEqual(report.flags, ['x'])
        data = report.as_dict()
        self.assertEqual(data['tau0'], 0.5)
        self.assertEqual(data['flags'], ['x'])
        self.assertNotIn('groups', data)
        self.assertTrue(all(math.isfinite(float(v)) for _, v in report.as_rows()))
