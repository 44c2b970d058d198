"""
Key rates of the 6-4 and 6-6 state RFI protocols under the same channel, decoy and
finite-key accounting as the 4-state protocol, for side-by-side comparison.

In both baselines Alice prepares Z0/Z1 with p_Z/2 each and X0/X1/Y0/Y1 with
(1 - p_Z)/4 each. Bob measures Z/X in the 6-4 protocol and Z/X/Y with probabilities
0.5/0.25/0.25 in the 6-6 protocol. The X and Y receiver paths share eta_xy.
"""
from __future__ import annotations

import enum
import logging
import math

import numpy as np

from rfiqkd import security
from rfiqkd.channel import expected_tallies, gain_and_error_yield, transmittance
from rfiqkd.core import AnalysisOptions, BasisLabel, KeyRateReport
from rfiqkd.decoy import class_bounds
from rfiqkd.keyrate import extract_key, failure_probability, key_length

log = logging.getLogger(__name__)

SIX_SIX_BOB = {'Z': 0.5, 'X': 0.25, 'Y': 0.25}


class BaselineProtocol(enum.Enum):
    FOUR_STATE = '4-state'
    SIX_FOUR = '6-4'
    SIX_SIX = '6-6'


def correlator(alice_basis, bob_basis, beta, e0):
    """ Single-photon <A B> for Bob's X/Y plane rotated by beta """
    v = 1.0 - 2.0 * e0
    pair = (alice_basis.upper(), bob_basis.upper())
    if pair == ('Z', 'Z'):
        return v
    if pair in (('X', 'X'), ('Y', 'Y')):
        return v * math.cos(beta)
    if pair == ('Y', 'X'):
        return v * math.sin(beta)
    if pair == ('X', 'Y'):
        return -v * math.sin(beta)
    return 0.0


def _bob_probs(protocol, cfg):
    if protocol == BaselineProtocol.SIX_SIX:
        return SIX_SIX_BOB
    return {'Z': cfg.p_z_bob, 'X': 1.0 - cfg.p_z_bob}


def class_counts(cfg, ch, distance_km, alice_basis, bob_basis, bob_prob):
    """
    Expected (detections, errors) per intensity, rounded, for one (Alice basis, Bob basis) class.
    """
    alice_prob = cfg.p_z_alice if alice_basis == 'Z' else (1.0 - cfg.p_z_alice) / 2.0
    path = BasisLabel.Z if bob_basis == 'Z' else BasisLabel.X
    eta = transmittance(distance_km, path, ch)
    e_mis = (1.0 - correlator(alice_basis, bob_basis, ch.beta, ch.e0)) / 2.0
    gain, error_yield = gain_and_error_yield(eta, cfg.means, ch.e_d, e_mis)
    pulses = cfg.n_total * alice_prob * cfg.probs * bob_prob
    return np.rint(pulses * gain), np.rint(pulses * error_yield)


def _correlator_bounds(e1):
    return 1.0 - 2.0 * e1.upper, 1.0 - 2.0 * e1.lower


def baseline_key_rate(protocol, cfg, ch, sec, distance_km, options=None):
    """ KeyRateReport of one protocol on the analytic expected statistics """
    options = options or AnalysisOptions()
    protocol = BaselineProtocol(protocol)
    if protocol == BaselineProtocol.FOUR_STATE:
        return extract_key(expected_tallies(cfg, ch, distance_km), cfg, sec, options)

    bob = _bob_probs(protocol, cfg)
    flags = []

    def bounds(alice_basis, bob_basis):
        n, m = class_counts(cfg, ch, distance_km, alice_basis, bob_basis, bob[bob_basis])
        return n, m, class_bounds(n, m, cfg, sec, options)

    zz_n, zz_m, zz = bounds('Z', 'Z')
    if options.n_zz_all_intensities:
        n_zz, m_zz = float(zz_n.sum()), float(zz_m.sum())
    else:
        n_zz, m_zz = float(zz_n[0]), float(zz_m[0])
    e_zz = m_zz / n_zz if n_zz else 0.0

    intermediate = {}
    pairs = [('X', 'X'), ('Y', 'X')]
    if protocol == BaselineProtocol.SIX_SIX:
        pairs += [('X', 'Y'), ('Y', 'Y')]
    magnitudes = []
    for a, b in pairs:
        e1 = bounds(a, b)[2].e1
        flags.extend(e1.flags)
        lower, upper = _correlator_bounds(e1)
        intermediate['corr_%s%s_lower' % (a, b)] = lower
        intermediate['corr_%s%s_upper' % (a, b)] = upper
        magnitudes.append(security.abs_lower(lower, upper))

    if protocol == BaselineProtocol.SIX_FOUR:
        c = security.c_64(*magnitudes)
        if c > 1.0:
            flags.append('C64 lower bound %.6g clamped to 1' % c)
            c = 1.0
        i_e = security.ie_4state(c)
    else:
        c = security.c_6state(*magnitudes)
        if c > 2.0:
            flags.append('C lower bound %.6g clamped to 2' % c)
            c = 2.0
        e1_zz = min(zz.e1.upper, 0.5)
        terms = security.six_state_terms(c, e1_zz, literal=options.literal_paper_formulas)
        flags.extend(terms.flags)
        i_e = security.ie_6state(c, e1_zz, literal=options.literal_paper_formulas)
        intermediate['e1_zz_upper'] = e1_zz

    s0, s1 = zz.s0, zz.s1
    flags.extend(s0.flags + s1.flags)
    n_total = int(cfg.n_total)
    kl = key_length(s0.lower, s1.lower, i_e, n_zz, e_zz, sec, n_total, finite_key=options.finite_key)
    report = KeyRateReport(s0.lower, s1.lower, c, i_e, e_zz, n_zz, kl.length, n_total,
                           raw_key_length=kl.raw, intermediate=intermediate,
                           failure_probability=failure_probability(sec))
    for f in flags + list(kl.flags):
        report.add_flag(f)
    log.debug('%s at %g km: %g bits', protocol.value, distance_km, report.key_length)
    return report
