import math

import numpy as np
from django.test import SimpleTestCase, tag

from rfiqkd.channel import expected_tallies
from rfiqkd.core import AnalysisOptions, ChannelParams, ObservedTallies, ProtocolConfig, SecurityParams
from rfiqkd.keyrate import (NEGATIVE_LENGTH, OVERFLOW_BUCKET, extract_key, group_and_extract,
                            group_slices, key_length, rho_bucket, rho_classify, rho_phase, slice_rho)
from rfiqkd.montecarlo import DriftModel, drift_beta, sample_drifting_tallies
from rfiqkd.security import ie_4state

SEC = SecurityParams()
PRINTED = AnalysisOptions(literal_paper_formulas=True)


class KeyLengthTest(SimpleTestCase):

    def test_no_counts(self):
        kl = key_length(0, 0, 0.5, 0, 0.0, SEC, 10 ** 6)
        self.assertEqual(kl.length, 0.0)
        self.assertLess(kl.raw, 0)
        self.assertIn(NEGATIVE_LENGTH, kl.flags)

    def test_full_leak_drops_single_photon_term(self):
        a = key_length(1e5, 1e9, 1.0, 1e6, 0.01, SEC, 10 ** 12)
        b = key_length(1e5, 0.0, 1.0, 1e6, 0.01, SEC, 10 ** 12)
        self.assertEqual(a.raw, b.raw)

    def test_monotone(self):
        base = dict(s0=1e5, s1=1e8, i_e=0.2, n_zz=2e8, e_zz=0.01, sec=SEC, n_total=10 ** 12)
        ref = key_length(**base).raw
        for key, step, sign in (('s0', 1e4, 1), ('s1', 1e6, 1), ('e_zz', 0.01, -1), ('i_e', 0.05, -1)):
            changed = dict(base, **{key: base[key] + step})
            self.assertEqual(np.sign(key_length(**changed).raw - ref), sign, key)

    def test_asymptotic_is_upper_bound(self):
        args = (1e5, 1e8, 0.2, 2e8, 0.01, SEC, 10 ** 12)
        self.assertLess(key_length(*args).raw, key_length(*args, finite_key=False).raw)

    def test_reference_operating_point(self):
        cfg = ProtocolConfig()
        report = extract_key(expected_tallies(cfg, ChannelParams(), 200), cfg, SEC)
        kl = key_length(report.s0_zz_lower, 3.3e7, ie_4state(0.6503), report.n_zz, 0.0077, SEC, cfg.n_total)
        rate = kl.length / cfg.n_total
        self.assertGreater(rate, 3.04e-6 / 3)
        self.assertLess(rate, 3.04e-6 * 3)


class RhoTest(SimpleTestCase):

    def test_clamped_argument(self):
        rho = rho_classify(0.1, 0.5, eta=0.01, mu=0.55, e_d=0.0, e0=0.0)
        self.assertEqual(rho.rho, 0.0)
        self.assertTrue(any('clamped' in f for f in rho.flags))

    def test_branch_on_e_xx(self):
        low = rho_classify(0.3, 0.5, eta=0.01, mu=0.55, e_d=0.0, e0=0.0)
        high = rho_classify(0.7, 0.5, eta=0.01, mu=0.55, e_d=0.0, e0=0.0)
        self.assertLessEqual(low.rho, math.pi)
        self.assertGreaterEqual(high.rho, math.pi)
        self.assertLessEqual(high.rho, 2 * math.pi)

    def test_degenerate(self):
        rho = rho_classify(0.005, 0.5, eta=0.01, mu=0.55, e_d=1e-7, e0=0.01)
        self.assertTrue(rho.degenerate)
        self.assertTrue(rho.flags)

    def test_exponent_sign_variants(self):
        cfg, ch = ProtocolConfig(n_total=10 ** 10), ChannelParams(beta=math.pi / 4)
        t = expected_tallies(cfg, ch, 50)
        printed = slice_rho(t, cfg, ch, 50, PRINTED)
        negated = slice_rho(t, cfg, ch, 50, AnalysisOptions(literal_paper_formulas=True, rho_negative_exponent=True))
        self.assertFalse(printed.degenerate)
        self.assertFalse(negated.degenerate)
        self.assertNotAlmostEqual(printed.rho, negated.rho)

    def test_phase(self):
        self.assertEqual(rho_phase(0.01, 0.5).rho, 0.0)
        self.assertAlmostEqual(rho_phase(0.5, 0.01).rho, math.pi / 2)
        self.assertAlmostEqual(rho_phase(0.99, 0.5).rho, math.pi)
        self.assertAlmostEqual(rho_phase(0.5, 0.99).rho, 3 * math.pi / 2)
        self.assertTrue(rho_phase(0.5, 0.5).degenerate)

    def test_phase_follows_beta(self):
        cfg = ProtocolConfig(n_total=10 ** 10)
        for beta in np.linspace(0.1, 6.2, 20):
            ch = ChannelParams(beta=beta)
            rho = slice_rho(expected_tallies(cfg, ch, 50), cfg, ch, 50)
            self.assertAlmostEqual(rho.rho, beta, delta=0.01)

    def test_printed_classifier_saturates(self):
        cfg = ProtocolConfig(n_total=10 ** 10)
        clamped = 0
        for beta in np.linspace(0.1, 6.2, 20):
            ch = ChannelParams(beta=beta)
            rho = slice_rho(expected_tallies(cfg, ch, 50), cfg, ch, 50, PRINTED)
            clamped += any('clamped' in f for f in rho.flags)
        # only the slice near beta = 5pi/4, where E_YX ~ E_XX, escapes
        self.assertGreaterEqual(clamped, 18)

    @tag('slow')
    def test_linear_sweep_is_monotone_per_half_turn(self):
        trace = drift_beta(DriftModel.full_turn(24, beta0=0.1), 24, pulses_per_slice=10 ** 8)
        cfg = ProtocolConfig(n_total=trace.n_total)
        slices = sample_drifting_tallies(cfg, ChannelParams(), 50, trace, seed=3)
        pairs = sorted((beta, slice_rho(s.tallies, cfg, ChannelParams(), 50).rho)
                       for (_, beta), s in zip(trace, slices))
        for half in ([p for p in pairs if p[0] < math.pi], [p for p in pairs if p[0] >= math.pi]):
            self.assertEqual(len(half), 12)
            rhos = [rho for _, rho in half]
            self.assertEqual(rhos, sorted(rhos))
            for beta, rho in half:
                self.assertAlmostEqual(rho, beta, delta=0.1)

    def test_bucket(self):
        self.assertEqual(rho_bucket(0.0, 6), 0)
        self.assertEqual(rho_bucket(math.pi, 6), 3)
        self.assertEqual(rho_bucket(2 * math.pi, 6), 5)
        self.assertEqual(rho_bucket(1.0, 1), 0)


class ExtractKeyTest(SimpleTestCase):

    def test_operating_point_at_200km(self):
        cfg = ProtocolConfig()
        report = extract_key(expected_tallies(cfg, ChannelParams(), 200), cfg, SEC)
        self.assertEqual(report.n_total, cfg.n_total)
        self.assertGreater(report.key_rate, 6e-8)
        self.assertLess(report.key_rate, 8.5e-8)
        self.assertGreater(report.c44_lower, 0.5)
        self.assertLess(report.c44_lower, 0.65)
        self.assertGreater(report.i_e, 0)
        self.assertAlmostEqual(report.intermediate['tau0'], 0.683635, places=6)
        self.assertAlmostEqual(report.failure_probability, 3e-10)
        self.assertTrue(all(math.isfinite(float(v)) for _, v in report.as_rows()))

    def test_back_to_back(self):
        cfg = ProtocolConfig(n_total=10 ** 12)
        report = extract_key(expected_tallies(cfg, ChannelParams(), 0), cfg, SEC)
        self.assertGreater(report.key_rate, 0)
        self.assertAlmostEqual(report.e_zz, 0.01, places=3)

    def test_small_block_gives_no_key(self):
        cfg = ProtocolConfig(n_total=10 ** 6)
        report = extract_key(expected_tallies(cfg, ChannelParams(), 200), cfg, SEC)
        self.assertEqual(report.key_length, 0.0)
        self.assertTrue(report.flags)

    def test_insufficient_counts(self):
        report = extract_key(ObservedTallies.zeros(), ProtocolConfig(), SEC)
        self.assertEqual(report.key_length, 0.0)
        self.assertTrue(report.flags[0].startswith('insufficient counts'))

    def test_rate_decreases_with_distance(self):
        cfg = ProtocolConfig(n_total=10 ** 13)
        rates = [extract_key(expected_tallies(cfg, ChannelParams(), d), cfg, SEC).key_rate
                 for d in range(0, 260, 10)]
        for a, b in zip(rates, rates[1:]):
            if a > 0:
                self.assertLess(b, a)
            else:
                self.assertEqual(b, 0.0)

    def test_finite_below_asymptotic(self):
        cfg = ProtocolConfig(n_total=10 ** 13)
        for d in (0, 100, 200):
            t = expected_tallies(cfg, ChannelParams(), d)
            finite = extract_key(t, cfg, SEC).key_rate
            asymptotic = extract_key(t, cfg, SEC, AnalysisOptions(finite_key=False)).key_rate
            self.assertLess(finite, asymptotic)

    def test_eve_is_charged_at_every_distance(self):
        cfg = ProtocolConfig(n_total=10 ** 13)
        for d in (0, 50, 100, 150, 200):
            report = extract_key(expected_tallies(cfg, ChannelParams(), d), cfg, SEC)
            self.assertGreater(report.c44_lower, 0)
            self.assertLess(report.c44_lower, 1)
            self.assertGreater(report.i_e, 0)
            self.assertFalse([f for f in report.flags if f.startswith('C44 lower bound')])


def _analytic_slices(cfg, distance_km, trace):
    slice_cfg = cfg.with_total(trace.pulses_per_slice)
    return [expected_tallies(slice_cfg, ChannelParams(beta=beta), distance_km) for _, beta in trace]


class GroupingTest(SimpleTestCase):

    cfg = ProtocolConfig(n_total=10 ** 11)

    def test_single_group_is_ungrouped_analysis(self):
        trace = drift_beta(DriftModel(beta0=0.4), 10, pulses_per_slice=10 ** 10)
        slices = _analytic_slices(self.cfg, 50, trace)
        grouped = group_and_extract(slices, 1, self.cfg, ChannelParams(), SEC, 50)
        direct = extract_key(ObservedTallies.total(slices), self.cfg, SEC)
        self.assertEqual(grouped.key_length, direct.key_length)
        self.assertEqual(grouped.as_dict(), direct.as_dict())

    def test_grouping_conserves_counts(self):
        trace = drift_beta(DriftModel.full_turn(24), 24, pulses_per_slice=10 ** 9)
        slices = _analytic_slices(self.cfg.with_total(24 * 10 ** 9), 50, trace)
        grouped = group_slices(slices, 6, self.cfg, ChannelParams(), 50)
        self.assertEqual(grouped.total(), ObservedTallies.total(slices))
        self.assertEqual(sum(grouped.slice_counts) + grouped.overflow_count, 24)
        np.testing.assert_allclose(grouped.rho_range(1), (math.pi / 3, 2 * math.pi / 3))
        for index, _ in grouped.analysed():
            self.assertTrue(index == OVERFLOW_BUCKET or 0 <= index < 6)

    def test_constant_beta_gains_nothing_from_groups(self):
        trace = drift_beta(DriftModel(beta0=0.0), 10, pulses_per_slice=10 ** 10)
        slices = _analytic_slices(self.cfg, 50, trace)
        one = group_and_extract(slices, 1, self.cfg, ChannelParams(), SEC, 50)
        six = group_and_extract(slices, 6, self.cfg, ChannelParams(), SEC, 50)
        self.assertLessEqual(six.key_length, one.key_length)

    def test_full_turn_drift_recovered_by_grouping(self):
        trace = drift_beta(DriftModel.full_turn(100), 100, pulses_per_slice=10 ** 9)
        slices = _analytic_slices(self.cfg, 50, trace)
        one = group_and_extract(slices, 1, self.cfg, ChannelParams(), SEC, 50)
        six = group_and_extract(slices, 6, self.cfg, ChannelParams(), SEC, 50)
        fixed = extract_key(expected_tallies(self.cfg, ChannelParams(), 50), self.cfg, SEC)
        self.assertGreater(six.key_length, one.key_length)
        self.assertLessEqual(one.key_length, 0.1 * fixed.key_length)
        self.assertEqual(six.key_length, math.fsum(g.key_length for g in six.groups))
        self.assertAlmostEqual(six.failure_probability, len(six.groups) * 3e-10)
        self.assertTrue(all('rho_bucket' in g.intermediate for g in six.groups))

    def test_parallel_groups_match_sequential(self):
        trace = drift_beta(DriftModel.full_turn(12), 12, pulses_per_slice=10 ** 9)
        slices = _analytic_slices(self.cfg.with_total(12 * 10 ** 9), 50, trace)
        cfg = self.cfg.with_total(12 * 10 ** 9)
        sequential = group_and_extract(slices, 6, cfg, ChannelParams(), SEC, 50)
        parallel = group_and_extract(slices, 6, cfg, ChannelParams(), SEC, 50, workers=2)
        self.assertEqual(sequential.as_dict(), parallel.as_dict())

    @tag('slow')
    def test_monte_carlo_drift(self):
        trace = drift_beta(DriftModel.full_turn(100), 100, pulses_per_slice=10 ** 9)
        slices = sample_drifting_tallies(self.cfg, ChannelParams(), 50, trace, seed=17)
        one = group_and_extract(slices, 1, self.cfg, ChannelParams(), SEC, 50)
        six = group_and_extract(slices, 6, self.cfg, ChannelParams(), SEC, 50)
        self.assertGreater(six.key_length, one.key_length)
        again = sample_drifting_tallies(self.cfg, ChannelParams(), 50, trace, seed=17)
        self.assertEqual(six.as_dict(), group_and_extract(again, 6, self.cfg, ChannelParams(), SEC, 50).as_dict())
