"""
Finite-key secret key length, the drift classification parameter rho and grouped
extraction.

extract_key() runs decoy bounds -> C44 -> key length on one set of tallies.
group_and_extract() classifies time slices by rho, runs extract_key() once per group and
sums the key lengths.

Slices are classified by the phase of the two signal-intensity X-basis correlators,
rho_phase(). The printed classifier rho_classify() saturates under the fiber model: its
2/(eta mu) factor drives the arccos argument to around 1e3 at 50 km, so away from
E_YX ~ E_XX it only yields 0, pi or 2pi. It is used with literal_paper_formulas and needs
the distance.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Optional, Tuple

import numpy as np

from rfiqkd import security
from rfiqkd.channel import transmittance
from rfiqkd.core import (AnalysisOptions, BasisLabel, IntensityLabel, KeyRateReport,
                         ObservedTallies, StateLabel, binary_entropy)
from rfiqkd.decoy import class_bounds, single_photon_bound, tau, vacuum_bound

log = logging.getLogger(__name__)

__all__ = ['binary_entropy', 'key_length', 'rho_classify', 'rho_phase', 'rho_bucket',
           'extract_key', 'group_slices', 'group_and_extract', 'GroupedData', 'KeyLength',
           'RhoClass']

NEGATIVE_LENGTH = 'negative length'
OVERFLOW_BUCKET = -1
ZZ_STATES = (StateLabel.Z0, StateLabel.Z1)
# (name, states) of the X-basis classes feeding C1 and C2
X_CLASSES = (('Z0X', (StateLabel.Z0,)), ('Z1X', (StateLabel.Z1,)),
             ('X0X', (StateLabel.X0,)), ('Y0X', (StateLabel.Y0,)))


## KEY LENGTH

@dataclass(frozen=True)
class KeyLength:
    length: float
    raw: float
    flags: Tuple[str, ...] = ()


def key_length(s0, s1, i_e, n_zz, e_zz, sec, n_total, finite_key=True):
    """
    l = s0 + s1 (1 - I_E) - n_ZZ f h(E_ZZ) - log2(2/eps_EC) - 2 log2(2/eps_PA)
        - 7 sqrt(n_ZZ log2(2/eps_bar)) - 30 log2(N + 1),  clamped at 0.

    finite_key=False drops the last four terms.
    """
    raw = s0 + s1 * (1.0 - i_e) - n_zz * sec.f * binary_entropy(min(max(e_zz, 0.0), 1.0))
    if finite_key:
        raw -= (math.log2(2.0 / sec.eps_ec) + 2.0 * math.log2(2.0 / sec.eps_pa)
                + 7.0 * math.sqrt(n_zz * math.log2(2.0 / sec.eps_bar))
                + 30.0 * math.log2(n_total + 1.0))
    if raw < 0:
        return KeyLength(0.0, raw, (NEGATIVE_LENGTH,))
    return KeyLength(raw, raw)


## RHO CLASSIFICATION

@dataclass(frozen=True)
class RhoClass:
    """ rho in [0, 2pi], or None when the slice cannot be classified """
    rho: Optional[float]
    flags: Tuple[str, ...] = ()

    @property
    def degenerate(self):
        return self.rho is None


def rho_classify(e_xx, e_xy, eta, mu, e_d, e0, negative_exponent=False):
    """
    Maps signal-intensity X-basis error rates to the classification angle rho.

    e_xy is the quadrature statistic: the Y0-in-X error rate, since Bob has no Y basis.
    Branches on e_xx: rho = arccos(a) below 0.5, 2pi - arccos(a) otherwise, with
    a = 2/(eta mu) ln(H / 2E) - 1 clamped to [-1, 1].
    """
    hat_xx = (e_xx - e0) / (1.0 - e0)
    hat_xy = max((e_xy - e0) / (1.0 - e0), 0.0)
    if hat_xx <= 0:
        return RhoClass(None, ('rho degenerate: normalised E_XX %.6g <= 0' % hat_xx,))
    sign = -1.0 if negative_exponent else 1.0
    radicand = (4.0 * math.exp(sign * eta * mu) * hat_xy * (1.0 - hat_xx)
                + (1.0 - e_d) ** 2 * (1.0 - 2.0 * hat_xx) ** 2)
    h = (1.0 - e_d) * (2.0 * hat_xx - 1.0) + math.sqrt(max(radicand, 0.0))
    if h <= 0:
        return RhoClass(None, ('rho degenerate: H %.6g <= 0' % h,))
    arg = 2.0 / (eta * mu) * math.log(h / (2.0 * hat_xx)) - 1.0
    flags = ()
    if not -1.0 <= arg <= 1.0:
        flags = ('rho arccos argument %.6g clamped' % arg,)
        arg = min(max(arg, -1.0), 1.0)
    rho = math.acos(arg)
    if e_xx >= 0.5:
        rho = 2.0 * math.pi - rho
    return RhoClass(rho, flags)


def rho_phase(e_xx, e_yx):
    """
    rho = atan2(1 - 2 E_YX, 1 - 2 E_XX), wrapped into [0, 2pi].

    The two correlators follow v cos(beta) and v sin(beta) for any visibility v, so rho
    follows beta over the whole turn.
    """
    c, s = 1.0 - 2.0 * e_xx, 1.0 - 2.0 * e_yx
    if c == 0 and s == 0:
        return RhoClass(None, ('rho degenerate: both X-basis correlators are 0',))
    return RhoClass(math.atan2(s, c) % (2.0 * math.pi))


def rho_bucket(rho, m):
    """ Index of the uniform [2pi i/M, 2pi (i+1)/M) interval holding rho; 2pi goes to M-1 """
    return min(int(rho / (2.0 * math.pi) * m), m - 1)


def slice_rho(tallies, cfg, ch, distance_km, options=None):
    """ rho of one slice from its signal-intensity X-basis statistics """
    options = options or AnalysisOptions()
    mu = IntensityLabel.MU
    x0 = tallies.cell(StateLabel.X0, BasisLabel.X, mu)
    y0 = tallies.cell(StateLabel.Y0, BasisLabel.X, mu)
    if x0.n == 0 or y0.n == 0:
        return RhoClass(None, ('rho degenerate: no signal detections in the X basis',))
    if not options.literal_paper_formulas:
        return rho_phase(x0.m / x0.n, y0.m / y0.n)
    eta = transmittance(distance_km, BasisLabel.X, ch)
    return rho_classify(x0.m / x0.n, y0.m / y0.n, eta, cfg.mu.mean, ch.e_d, ch.e0,
                        negative_exponent=options.rho_negative_exponent)


## EXTRACTION

def _insufficient(tallies):
    missing = []
    for name, states, basis in [('ZZ', ZZ_STATES, BasisLabel.Z)] + [
            (n, s, BasisLabel.X) for n, s in X_CLASSES]:
        counts = tallies.detections(states, basis)
        for k in (IntensityLabel.MU, IntensityLabel.NU):
            if counts[k] == 0:
                missing.append('%s/%s' % (name, k.name.lower()))
    return missing


def extract_key(tallies, cfg, sec, options=None):
    """
    Decoy bounds -> C44 -> key length for one set of tallies.

    cfg supplies the intensities and their probabilities; the block length N is the
    number of pulses recorded in `tallies`.
    """
    options = options or AnalysisOptions()
    tallies = getattr(tallies, 'tallies', tallies)
    n_total = int(tallies.sent[:, 0, :].sum())

    zz_n = tallies.detections(ZZ_STATES, BasisLabel.Z)
    zz_m = tallies.errors(ZZ_STATES, BasisLabel.Z)
    if options.n_zz_all_intensities:
        n_zz, m_zz = float(zz_n.sum()), float(zz_m.sum())
    else:
        n_zz, m_zz = float(zz_n[IntensityLabel.MU]), float(zz_m[IntensityLabel.MU])
    e_zz = m_zz / n_zz if n_zz else 0.0

    missing = _insufficient(tallies)
    if missing:
        report = KeyRateReport(0.0, 0.0, 0.0, 1.0, e_zz, n_zz, 0.0, n_total,
                               failure_probability=failure_probability(sec))
        report.add_flag('insufficient counts: ' + ', '.join(missing))
        log.info('No key extracted from %d pulses: zero counts in %s', n_total, ', '.join(missing))
        return report

    intermediate = {'tau0': tau(0, cfg.intensities), 'tau1': tau(1, cfg.intensities)}
    flags = []

    s0 = vacuum_bound(zz_n, cfg, sec, options)
    s1 = single_photon_bound(zz_n, s0, cfg, sec, options)
    intermediate.update({'s0_zz_upper': s0.upper, 's1_zz_upper': s1.upper})
    flags.extend(s0.flags + s1.flags)

    rates = []
    for name, states in X_CLASSES:
        b = class_bounds(tallies.detections(states, BasisLabel.X), tallies.errors(states, BasisLabel.X),
                         cfg, sec, options)
        rates.append(b.e1)
        flags.extend(b.e1.flags)
        intermediate.update({
            's1_%s_lower' % name: b.s1.lower, 's1_%s_upper' % name: b.s1.upper,
            't_%s_lower' % name: b.t.lower, 't_%s_upper' % name: b.t.upper,
            'e1_%s_lower' % name: b.e1.lower, 'e1_%s_upper' % name: b.e1.upper,
        })

    cb = security.c_bounds(*rates, literal=options.literal_paper_formulas)
    flags.extend(cb.flags)
    intermediate.update({'c1_lower': cb.c1[0], 'c1_upper': cb.c1[1],
                         'c2_lower': cb.c2[0], 'c2_upper': cb.c2[1]})
    i_e = security.ie_4state(cb.c44_lower)

    kl = key_length(s0.lower, s1.lower, i_e, n_zz, e_zz, sec, n_total, finite_key=options.finite_key)
    report = KeyRateReport(s0.lower, s1.lower, cb.c44_lower, i_e, e_zz, n_zz, kl.length, n_total,
                           raw_key_length=kl.raw, intermediate=intermediate,
                           failure_probability=failure_probability(sec))
    for f in flags + list(kl.flags):
        report.add_flag(f)
    log.debug('Extracted %g bits from %d pulses (C44 >= %.6g, I_E <= %.6g)',
              report.key_length, n_total, cb.c44_lower, i_e)
    return report


def failure_probability(sec):
    return sec.eps_ec + sec.eps_pa + sec.eps_bar


## GROUPING

@dataclass(frozen=True)
class GroupedData:
    """
    Slices accumulated into M uniform rho buckets plus an overflow bucket for slices
    that could not be classified.
    """
    buckets: Tuple[ObservedTallies, ...]
    slice_counts: Tuple[int, ...]
    overflow: ObservedTallies
    overflow_count: int
    flags: Tuple[str, ...] = ()

    @property
    def m(self):
        return len(self.buckets)

    def rho_range(self, index):
        width = 2.0 * math.pi / self.m
        return index * width, (index + 1) * width

    def total(self):
        return ObservedTallies.total(self.buckets + (self.overflow,))

    def analysed(self):
        """ (bucket index, tallies) of every non-empty bucket; the overflow bucket is -1 and comes last """
        groups = [(i, t) for i, (t, c) in enumerate(zip(self.buckets, self.slice_counts)) if c]
        if self.overflow_count:
            groups.append((OVERFLOW_BUCKET, self.overflow))
        return groups


def group_slices(slices, m, cfg, ch, distance_km, options=None):
    """ Classifies each slice by rho and sums the tallies of each bucket """
    if m < 1:
        raise ValueError('M must be >= 1')
    buckets = [ObservedTallies.zeros() for _ in range(m)]
    counts = [0] * m
    overflow, overflow_count = ObservedTallies.zeros(), 0
    flags = []
    for index, data in enumerate(slices):
        tallies = getattr(data, 'tallies', data)
        rho = slice_rho(tallies, cfg, ch, distance_km, options)
        flags.extend('slice %d: %s' % (index, f) for f in rho.flags)
        if rho.degenerate:
            overflow = overflow + tallies
            overflow_count += 1
            continue
        i = rho_bucket(rho.rho, m)
        buckets[i] = buckets[i] + tallies
        counts[i] += 1
    if overflow_count:
        log.info('%d slice(s) could not be classified and went to the overflow group', overflow_count)
    return GroupedData(tuple(buckets), tuple(counts), overflow, overflow_count, tuple(flags))


def group_and_extract(slices, m, cfg, ch, sec, distance_km, options=None, workers=1):
    """
    Total key length of a drifting run analysed in M rho groups.

    M=1 analyses the summed tallies without classification. Otherwise each non-empty
    group (and the overflow group) is analysed on its own and the key lengths are
    summed in bucket order.
    """
    options = options or AnalysisOptions()
    slices = list(slices)
    if m == 1:
        return extract_key(ObservedTallies.total(getattr(s, 'tallies', s) for s in slices), cfg, sec, options)

    grouped = group_slices(slices, m, cfg, ch, distance_km, options)
    analysed = grouped.analysed()
    indices = [i for i, _ in analysed]
    data = [t for _, t in analysed]
    job = partial(extract_key, cfg=cfg, sec=sec, options=options)
    if workers > 1 and len(data) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(job, data))
    else:
        reports = [job(t) for t in data]
    for index, report in zip(indices, reports):
        report.intermediate['rho_bucket'] = float(index)
    return _combine(reports, grouped, sec)


def _combine(reports, grouped, sec):
    n_total = int(grouped.total().sent[:, 0, :].sum())
    if not reports:
        report = KeyRateReport(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, n_total)
        report.add_flag('no slices to analyse')
        return report
    # math.fsum keeps the sum independent of evaluation order
    s1 = math.fsum(r.s1_zz_lower for r in reports)
    n_zz = math.fsum(r.n_zz for r in reports)
    weights = [r.s1_zz_lower for r in reports] if s1 > 0 else [1.0] * len(reports)
    report = KeyRateReport(
        s0_zz_lower=math.fsum(r.s0_zz_lower for r in reports),
        s1_zz_lower=s1,
        c44_lower=float(np.average([r.c44_lower for r in reports], weights=weights)),
        i_e=float(np.average([r.i_e for r in reports], weights=weights)),
        e_zz=math.fsum(r.e_zz * r.n_zz for r in reports) / n_zz if n_zz else 0.0,
        n_zz=n_zz,
        key_length=math.fsum(r.key_length for r in reports),
        n_total=n_total,
        raw_key_length=math.fsum(r.raw_key_length for r in reports),
        intermediate={'groups_analysed': float(len(reports)),
                      'groups_with_key': float(sum(1 for r in reports if r.key_length > 0)),
                      'overflow_slices': float(grouped.overflow_count)},
        failure_probability=failure_probability(sec) * len(reports),
        groups=list(reports),
    )
    for f in grouped.flags:
        report.add_flag(f)
    if report.key_length <= 0:
        report.add_flag(NEGATIVE_LENGTH)
    return report
