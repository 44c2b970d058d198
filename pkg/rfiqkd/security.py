"""
Channel-quality statistics and Eve-information bounds.

Correlators and single-photon error rates are tied by <A B> = 1 - 2 e, e being the rate
of the cell's designated error outcome. With Bob measuring only X:

    C1 = e(Z0,X) + e(Z1,X) - 2 e(X0,X)        ( = <X_A X_B> )
    C2 = e(Z0,X) + e(Z1,X) - 2 e(Y0,X)        ( = <Y_A X_B> )
    C44 = sqrt(C1^2 + C2^2)

C44 does not depend on the frame rotation beta, and I_E = h((1 - C44) / 2).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from rfiqkd.core import binary_entropy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CBounds:
    c1: Tuple[float, float]
    c2: Tuple[float, float]
    c44_lower: float
    flags: Tuple[str, ...] = ()


def c1_c2_point(e_z0x, e_z1x, e_x0x, e_y0x):
    """ (C1, C2) from single-photon error rates """
    base = e_z0x + e_z1x
    return base - 2.0 * e_x0x, base - 2.0 * e_y0x


def abs_lower(lower, upper):
    """ Lower bound on |c| for c in [lower, upper] """
    if lower > upper:
        raise ValueError('empty interval [%r, %r]' % (lower, upper))
    if lower > 0 and upper > 0:
        return lower
    if lower < 0 and upper < 0:
        return -upper
    return 0.0


def _c44(c1, c2):
    value = math.hypot(abs_lower(*c1), abs_lower(*c2))
    if value > 1.0:
        return 1.0, ('C44 lower bound %.6g clamped to 1' % value,)
    return value, ()


def c_bounds(e_z0x, e_z1x, e_x0x, e_y0x, literal=False):
    """
    Intervals for C1 and C2 from single-photon error-rate intervals (pairs or BoundedCount).

    :param literal: use e(Y0,X) instead of e(X0,X) in the lower bound on C1
    """
    z0, z1, x0, y0 = (_pair(e) for e in (e_z0x, e_z1x, e_x0x, e_y0x))
    c1_lower_term = y0[1] if literal else x0[1]
    c1 = (z0[0] + z1[0] - 2.0 * c1_lower_term, z0[1] + z1[1] - 2.0 * x0[0])
    c2 = (z0[0] + z1[0] - 2.0 * y0[1], z0[1] + z1[1] - 2.0 * y0[0])
    flags = ()
    if c1[0] > c1[1]:
        flags += ('C1 interval inverted, widened to its hull',)
        c1 = (c1[1], c1[0])
    if c2[0] > c2[1]:
        flags += ('C2 interval inverted, widened to its hull',)
        c2 = (c2[1], c2[0])
    c44, clamp_flags = _c44(c1, c2)
    for f in flags + clamp_flags:
        log.debug(f)
    return CBounds(c1, c2, c44, flags + clamp_flags)


def _pair(e):
    if hasattr(e, 'lower'):
        return float(e.lower), float(e.upper)
    lower, upper = e
    return float(lower), float(upper)


def c44_lower(cb):
    """ sqrt(|C1|_L^2 + |C2|_L^2), clamped to [0, 1] """
    return _c44(cb.c1, cb.c2)[0]


def ie_4state(c44):
    """ Bits leaked to Eve per sifted bit, h((1 - C44) / 2) """
    c44 = min(max(float(c44), 0.0), 1.0)
    return binary_entropy((1.0 - c44) / 2.0)


## BASELINES

def c_6state(xx, xy, yx, yy):
    """ Sum of the four squared X/Y correlators, in [0, 2] """
    return float(xx ** 2 + xy ** 2 + yx ** 2 + yy ** 2)


def c_64(xx, yx):
    return math.hypot(xx, yx)


@dataclass(frozen=True)
class SixStateTerms:
    u: float
    v: float
    flags: Tuple[str, ...] = ()


def six_state_terms(c, e_zz, literal=False):
    """
    u = min(sqrt(C/2) / (1 - E), 1) and v = sqrt(C/2 - (1 - E)^2 u^2) / E.

    :param literal: use the radicand C/2 - (1 - E^2 u^2)
    """
    flags = []
    half = max(float(c), 0.0) / 2.0
    u = min(math.sqrt(half) / (1.0 - e_zz), 1.0)
    if e_zz <= 0:
        return SixStateTerms(u, 0.0)
    radicand = half - (1.0 - e_zz ** 2 * u ** 2) if literal else half - (1.0 - e_zz) ** 2 * u ** 2
    if radicand < 0:
        flags.append('6-state radicand %.6g clamped to 0' % radicand)
        radicand = 0.0
    v = math.sqrt(radicand) / e_zz
    if v > 1.0:
        flags.append('6-state v %.6g clamped to 1' % v)
        v = 1.0
    for f in flags:
        log.debug(f)
    return SixStateTerms(u, v, tuple(flags))


def ie_6state(c, e_zz, literal=False):
    """ (1 - E) h((1 + u)/2) + E h((1 + v)/2) """
    terms = six_state_terms(c, e_zz, literal)
    leak = (1.0 - e_zz) * binary_entropy((1.0 + terms.u) / 2.0)
    if e_zz > 0:
        leak += e_zz * binary_entropy((1.0 + terms.v) / 2.0)
    return float(np.clip(leak, 0.0, 1.0))
