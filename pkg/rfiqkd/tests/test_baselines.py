import math

from django.test import SimpleTestCase

from rfiqkd.baselines import SIX_SIX_BOB, BaselineProtocol, baseline_key_rate, class_counts, correlator
from rfiqkd.channel import expected_tallies
from rfiqkd.core import ChannelParams, ProtocolConfig, SecurityParams
from rfiqkd.keyrate import extract_key


class CorrelatorTest(SimpleTestCase):

    def test_values(self):
        self.assertAlmostEqual(correlator('Z', 'Z', 0.3, 0.01), 0.98)
        self.assertAlmostEqual(correlator('X', 'X', 0.0, 0.01), 0.98)
        self.assertAlmostEqual(correlator('y', 'y', math.pi, 0.0), -1.0)
        self.assertAlmostEqual(correlator('Y', 'X', math.pi / 2, 0.01), 0.98)
        self.assertAlmostEqual(correlator('X', 'Y', math.pi / 2, 0.01), -0.98)
        self.assertEqual(correlator('Z', 'X', 1.0, 0.01), 0.0)

    def test_six_six_receiver(self):
        self.assertAlmostEqual(sum(SIX_SIX_BOB.values()), 1.0)

    def test_unbiased_class_is_random(self):
        n, m = class_counts(ProtocolConfig(), ChannelParams(), 50, 'Z', 'X', 0.5)
        self.assertTrue((m <= n).all())
        self.assertAlmostEqual(m[0] / n[0], 0.5, places=3)


class BaselineKeyRateTest(SimpleTestCase):

    cfg = ProtocolConfig(n_total=10 ** 13)
    ch = ChannelParams()
    sec = SecurityParams()

    def test_four_state_is_extract_key(self):
        report = baseline_key_rate('4-state', self.cfg, self.ch, self.sec, 100)
        direct = extract_key(expected_tallies(self.cfg, self.ch, 100), self.cfg, self.sec)
        self.assertEqual(report.as_dict(), direct.as_dict())

    def test_rates_across_distance(self):
        for d in range(0, 210, 20):
            four, six_four, six_six = (baseline_key_rate(p, self.cfg, self.ch, self.sec, d).key_rate
                                       for p in BaselineProtocol)
            self.assertGreater(four, 0, '%d km' % d)
            self.assertAlmostEqual(six_six / six_four, 1.0, delta=0.1, msg='%d km' % d)
            # C44 rests on the Z0/Z1-in-X classes, whose decoy error bounds are the loosest
            self.assertGreater(four / six_four, 0.05, '%d km' % d)
            self.assertLess(four / six_four, 0.5, '%d km' % d)

    def test_eve_is_charged(self):
        clamps = ('C44 lower bound', 'C64 lower bound', 'C lower bound', '6-state v')
        for protocol in BaselineProtocol:
            report = baseline_key_rate(protocol, self.cfg, self.ch, self.sec, 50)
            self.assertGreater(report.i_e, 0, protocol.value)
            self.assertFalse([f for f in report.flags if f.startswith(clamps)], protocol.value)

    def test_six_six_reports_all_correlators(self):
        report = baseline_key_rate('6-6', self.cfg, self.ch, self.sec, 50)
        for pair in ('XX', 'YX', 'XY', 'YY'):
            self.assertIn('corr_%s_lower' % pair, report.intermediate)
            self.assertLessEqual(report.intermediate['corr_%s_lower' % pair],
                                 report.intermediate['corr_%s_upper' % pair])
        self.assertLessEqual(report.c44_lower, 2.0)
        self.assertIn('e1_zz_upper', report.intermediate)

    def test_unknown_protocol(self):
        with self.assertRaises(ValueError):
            baseline_key_rate('8-state', self.cfg, self.ch, self.sec, 50)
