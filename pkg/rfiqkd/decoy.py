"""
Finite-size "weak + vacuum" decoy-state estimation.

Every estimator takes the per-intensity counts of one event class (an array indexed by
IntensityLabel: mu, nu, omega) and returns a BoundedCount. Observed counts are turned
into intervals for their means with fluctuation_interval(); the closed-form two-decoy
expressions are then evaluated at the interval ends.

The upper bounds on s0 and s1 and the lower bound on t hold for every non-negative
photon-number yield profile. literal_paper_formulas swaps in the printed forms, which
evaluate to about (1 - nu mu / 2) s1 for the upper s1 and about e^nu t for the lower t.

Counts are absolute numbers of events, not rates: s0 is the number of detections caused
by vacuum emissions of the class, s1 the number caused by single-photon emissions, t the
number of single-photon errors.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import stats

from rfiqkd.core import INTENSITIES, AnalysisOptions, EstimationError, IntensityLabel

log = logging.getLogger(__name__)

MU, NU, OMEGA = IntensityLabel.MU, IntensityLabel.NU, IntensityLabel.OMEGA


@dataclass(frozen=True)
class BoundedCount:
    """
    An estimate with its confidence interval.

    point is the observed value for a raw count, or the estimator evaluated without
    fluctuation terms for a derived one.
    """
    lower: float
    upper: float
    point: float
    flags: Tuple[str, ...] = ()

    def as_tuple(self):
        return (self.lower, self.upper)


def _clamped(name, lower, upper, point, top=None):
    """ Clamps an estimate to [0, top] and records every clamp as a flag """
    flags = []
    lower, upper, point = float(lower), float(upper), float(point)
    if lower < 0:
        flags.append('%s lower clamped to 0' % name)
        lower = 0.0
    if upper < 0:
        flags.append('%s upper clamped to 0' % name)
        upper = 0.0
    if top is not None:
        if upper > top:
            flags.append('%s upper clamped to %g' % (name, top))
            upper = float(top)
        if lower > top:
            flags.append('%s lower clamped to %g' % (name, top))
            lower = float(top)
    if lower > upper:
        flags.append('%s non-physical: lower %g > upper %g' % (name, lower, upper))
    for f in flags:
        log.debug(f)
    point = min(max(point, lower), max(lower, upper))
    return BoundedCount(lower, upper, point, tuple(flags))


## PHOTON-NUMBER STATISTICS

def tau(n, intensities):
    """
    Probability that Alice emits an n-photon pulse, averaged over the intensity classes.

    :param intensities: iterable of IntensityClass
    """
    if n < 0:
        raise ValueError('photon number must be >= 0')
    return float(sum(stats.poisson.pmf(n, k.mean) * k.prob for k in intensities))


## FLUCTUATIONS

def fluctuation_interval(x, eps, options=None):
    """
    Interval [x - dL, x + dU] for the mean x* of a sum of Bernoulli variables observed as x.

    With b = ln(1/eps): dL = b/2 + sqrt(2bx + b^2/4), dU = b + sqrt(2bx + b^2).
    literal_paper_formulas gives the printed upper end x - dU; finite_key=False gives
    the degenerate interval [x, x].
    """
    options = options or AnalysisOptions()
    if x < 0:
        raise ValueError('observed count must be >= 0, got %r' % x)
    if not 0 < eps < 1:
        raise ValueError('eps must lie in (0, 1), got %r' % eps)
    x = float(x)
    if not options.finite_key:
        return BoundedCount(x, x, x)
    b = math.log(1.0 / eps)
    delta_l = b / 2.0 + math.sqrt(2.0 * b * x + b * b / 4.0)
    delta_u = b + math.sqrt(2.0 * b * x + b * b)
    upper = x - delta_u if options.literal_paper_formulas else x + delta_u
    return BoundedCount(max(x - delta_l, 0.0), upper, x)


def count_intervals(counts, eps, options=None):
    """ fluctuation_interval() for each intensity of a class """
    return tuple(fluctuation_interval(counts[int(k)], eps, options) for k in INTENSITIES)


## DECOY ESTIMATORS

class _Decoy(object):
    """ Intensity constants shared by the closed-form estimators """

    def __init__(self, cfg):
        self.mu, self.nu, self.omega = (float(m) for m in cfg.means)
        self.p = [float(p) for p in cfg.probs]
        self.tau0 = tau(0, cfg.intensities)
        self.tau1 = tau(1, cfg.intensities)

    def check_vacuum(self):
        if not self.nu > self.omega:
            raise EstimationError('need nu > omega, got nu=%g omega=%g' % (self.nu, self.omega))

    def check_single(self):
        self.check_vacuum()
        if not self.mu * (self.nu - self.omega) > self.nu ** 2 - self.omega ** 2:
            raise EstimationError('need mu(nu - omega) > nu^2 - omega^2 (mu=%g nu=%g omega=%g)'
                                  % (self.mu, self.nu, self.omega))

    def scaled(self, k, count):
        """ e^k n_k / p_k, the count scaled back to the whole class """
        mean = (self.mu, self.nu, self.omega)[int(k)]
        return math.exp(mean) * count / self.p[int(k)]

    def vacuum(self, n_omega, n_nu):
        return self.tau0 / (self.nu - self.omega) * (
            self.nu * self.scaled(OMEGA, n_omega) - self.omega * self.scaled(NU, n_nu))

    def single(self, n_mu, n_nu, n_omega, s0):
        mu, nu, omega = self.mu, self.nu, self.omega
        c = mu * self.tau1 / (mu * (nu - omega) - (nu ** 2 - omega ** 2))
        return c * (self.scaled(NU, n_nu) - self.scaled(OMEGA, n_omega)
                    + (nu ** 2 - omega ** 2) / mu ** 2 * (s0 / self.tau0 - self.scaled(MU, n_mu)))

    def difference(self, n_nu, n_omega):
        """ tau1/(nu - omega) (e^nu n_nu/p_nu - e^omega n_omega/p_omega) """
        return self.tau1 / (self.nu - self.omega) * (self.scaled(NU, n_nu) - self.scaled(OMEGA, n_omega))


def vacuum_bound(counts, cfg, sec, options=None):
    """
    Bounds on s0, the number of detections from vacuum emissions in one event class.

    :param counts: detections per intensity, indexed by IntensityLabel
    """
    options = options or AnalysisOptions()
    d = _Decoy(cfg)
    d.check_vacuum()
    n = count_intervals(counts, sec.eps_bar, options)
    lower = d.vacuum(n[OMEGA].lower, n[NU].upper)
    if options.literal_paper_formulas:
        upper = d.vacuum(n[OMEGA].upper, n[NU].lower)
    else:
        upper = d.tau0 * d.scaled(OMEGA, n[OMEGA].upper)
    point = d.vacuum(counts[OMEGA], counts[NU])
    return _clamped('s0', lower, upper, point, top=float(np.sum(counts)))


def single_photon_bound(counts, s0, cfg, sec, options=None):
    """ Bounds on s1, the number of detections from single-photon emissions """
    options = options or AnalysisOptions()
    d = _Decoy(cfg)
    d.check_single()
    n = count_intervals(counts, sec.eps_bar, options)
    lower = d.single(n[MU].upper, n[NU].lower, n[OMEGA].upper, s0.lower)
    if options.literal_paper_formulas:
        upper = d.single(n[MU].lower, n[NU].upper, n[OMEGA].lower, s0.upper)
    else:
        upper = d.difference(n[NU].upper, n[OMEGA].lower)
    point = d.single(counts[MU], counts[NU], counts[OMEGA], s0.point)
    return _clamped('s1', lower, upper, point, top=float(np.sum(counts)))


def error_count_bound(error_counts, cfg, sec, options=None, detections=None):
    """
    Bounds on t, the number of single-photon errors in one event class.

    :param detections: per-intensity detections of the class; their sum caps the bound
    """
    options = options or AnalysisOptions()
    d = _Decoy(cfg)
    d.check_vacuum()
    m = count_intervals(error_counts, sec.eps_bar, options)
    upper = d.difference(m[NU].upper, m[OMEGA].lower)
    if options.literal_paper_formulas:
        lower = d.difference(m[NU].lower, m[OMEGA].upper)
    else:
        d.check_single()
        vacuum_errors = vacuum_bound(error_counts, cfg, sec, options)
        lower = d.single(m[MU].upper, m[NU].lower, m[OMEGA].upper, vacuum_errors.lower)
    point = d.difference(error_counts[NU], error_counts[OMEGA])
    top = float(np.sum(detections)) if detections is not None else None
    return _clamped('t', lower, upper, point, top=top)


def single_photon_error_rate(t, s1):
    """ e in [t_lower / s1_upper, t_upper / s1_lower], clamped to [0, 1] """
    flags = list(t.flags) + list(s1.flags)
    lower = t.lower / s1.upper if s1.upper > 0 else 0.0
    if s1.lower > 0:
        upper = t.upper / s1.lower
    else:
        upper = 1.0
        flags.append('single-photon count lower bound is 0; error rate set to 1')
    point = t.point / s1.point if s1.point > 0 else upper
    rate = _clamped('e1', min(lower, 1.0), min(upper, 1.0), point)
    return BoundedCount(rate.lower, rate.upper, rate.point, tuple(flags) + rate.flags)


@dataclass(frozen=True)
class ClassBounds:
    """ All decoy bounds of one event class """
    s0: BoundedCount
    s1: BoundedCount
    t: BoundedCount
    e1: BoundedCount


def class_bounds(counts, error_counts, cfg, sec, options=None):
    """ s0, s1, t and e1 for one (states, basis) event class """
    s0 = vacuum_bound(counts, cfg, sec, options)
    s1 = single_photon_bound(counts, s0, cfg, sec, options)
    t = error_count_bound(error_counts, cfg, sec, options, detections=counts)
    return ClassBounds(s0, s1, t, single_photon_error_rate(t, s1))
