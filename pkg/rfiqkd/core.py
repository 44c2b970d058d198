"""
Domain types shared by every part of the pipeline: state/basis/intensity labels, the
physical and protocol configuration, observed tallies and the key-rate report.

Everything here is an immutable value object once built. Configuration objects do not
validate themselves on construction; call validate_config() so that every violation
is reported at once instead of the first one.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import entr

log = logging.getLogger(__name__)


## EXCEPTIONS

class RfiError(Exception):
    """ Base class for every error raised by rfiqkd """
    pass


class InvalidConfiguration(RfiError):
    """ One or more configuration invariants are violated """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = ['%s=%r: %s' % (v.field, v.value, v.message) for v in self.violations]
        super().__init__('Invalid configuration:\n  ' + '\n  '.join(lines))


class InvalidTallies(RfiError):
    """ A tally cell is missing or breaks 0 <= m <= n <= sent """

    def __init__(self, cell, message):
        self.cell = cell
        super().__init__('%s: %s' % (cell, message))


class TallyFileError(RfiError):
    """ A tally file does not parse; line and column are 1-based """

    def __init__(self, path, line, column, message):
        self.path, self.line, self.column = path, line, column
        super().__init__('%s:%s:%s: %s' % (path, line, column, message))


class EstimationError(RfiError):
    """ A decoy-state estimator precondition does not hold """
    pass


## LABELS

class StateLabel(enum.IntEnum):
    """ States prepared by Alice. There is no X1 or Y1. """
    Z0 = 0
    Z1 = 1
    X0 = 2
    Y0 = 3


class BasisLabel(enum.IntEnum):
    """ Bases measured by Bob. There is no Y basis at the receiver. """
    Z = 0
    X = 1


class IntensityLabel(enum.IntEnum):
    MU = 0
    NU = 1
    OMEGA = 2


STATES = tuple(StateLabel)
BASES = tuple(BasisLabel)
INTENSITIES = tuple(IntensityLabel)
TALLY_SHAPE = (len(STATES), len(BASES), len(INTENSITIES))

# Bob outcome counted as an error for each (state, basis) cell
ERROR_OUTCOME = {
    (StateLabel.Z0, BasisLabel.Z): 'Z1',
    (StateLabel.Z1, BasisLabel.Z): 'Z0',
    (StateLabel.Z0, BasisLabel.X): 'X1',
    (StateLabel.Z1, BasisLabel.X): 'X1',
    (StateLabel.X0, BasisLabel.X): 'X1',
    (StateLabel.Y0, BasisLabel.X): 'X1',
    (StateLabel.X0, BasisLabel.Z): 'Z1',
    (StateLabel.Y0, BasisLabel.Z): 'Z1',
}


def cell_name(state, basis, intensity):
    return '(%s,%s,%s)' % (StateLabel(state).name, BasisLabel(basis).name,
                           IntensityLabel(intensity).name.lower())


## CONFIGURATION

@dataclass(frozen=True)
class IntensityClass:
    """ One decoy intensity: mean photon number and selection probability """
    label: IntensityLabel
    mean: float
    prob: float


@dataclass(frozen=True)
class ChannelParams:
    """ Physical-layer constants. Defaults are the simulation parameters of the 200 km system. """
    e0: float = 0.01
    alpha: float = 0.19
    eta_z_db: float = 4.0
    eta_xy_db: float = 9.0
    e_d: float = 1.3e-7
    eta_det: float = 0.6
    beta: float = 0.0

    def with_beta(self, beta):
        return replace(self, beta=float(beta))


@dataclass(frozen=True)
class SecurityParams:
    eps_bar: float = 1e-10
    eps_ec: float = 1e-10
    eps_pa: float = 1e-10
    f: float = 1.1


def default_intensities():
    return (IntensityClass(IntensityLabel.MU, 0.55, 0.54),
            IntensityClass(IntensityLabel.NU, 0.28, 0.36),
            IntensityClass(IntensityLabel.OMEGA, 0.0, 0.10))


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Alice/Bob choice probabilities and block parameters.

    p_x0 and p_y0 default to (1 - p_z_alice) / 2 each.
    """
    intensities: Tuple[IntensityClass, ...] = field(default_factory=default_intensities)
    p_z_alice: float = 0.77
    p_x0: Optional[float] = None
    p_y0: Optional[float] = None
    p_z_bob: float = 0.5
    n_total: int = 3 * 10 ** 12
    m_groups: int = 1

    def __post_init__(self):
        if self.p_x0 is None:
            object.__setattr__(self, 'p_x0', (1.0 - self.p_z_alice) / 2.0)
        if self.p_y0 is None:
            object.__setattr__(self, 'p_y0', (1.0 - self.p_z_alice) / 2.0)
        object.__setattr__(self, 'intensities', tuple(self.intensities))

    @property
    def mu(self):
        return self.intensity(IntensityLabel.MU)

    @property
    def nu(self):
        return self.intensity(IntensityLabel.NU)

    @property
    def omega(self):
        return self.intensity(IntensityLabel.OMEGA)

    def intensity(self, label):
        for k in self.intensities:
            if k.label == label:
                return k
        raise KeyError(label)

    @property
    def means(self):
        return np.array([self.intensity(k).mean for k in INTENSITIES], dtype=float)

    @property
    def probs(self):
        return np.array([self.intensity(k).prob for k in INTENSITIES], dtype=float)

    def state_prob(self, state):
        state = StateLabel(state)
        if state in (StateLabel.Z0, StateLabel.Z1):
            return self.p_z_alice / 2.0
        if state == StateLabel.X0:
            return self.p_x0
        return self.p_y0

    def basis_prob(self, basis):
        return self.p_z_bob if BasisLabel(basis) == BasisLabel.Z else 1.0 - self.p_z_bob

    def with_total(self, n_total):
        return replace(self, n_total=int(n_total))


@dataclass(frozen=True)
class AnalysisOptions:
    """
    Estimator variants. The defaults are valid confidence bounds with the printed typos
    corrected; literal_paper_formulas restores every printed form.
    """
    finite_key: bool = True
    literal_paper_formulas: bool = False
    n_zz_all_intensities: bool = True
    rho_negative_exponent: bool = False


## VALIDATION

@dataclass(frozen=True, order=True)
class Violation:
    field: str
    value: object = field(compare=False)
    message: str = ""


def _prob(violations, name, value, open_interval=False):
    if value is None or not math.isfinite(value):
        violations.append(Violation(name, value, 'must be a finite number'))
    elif open_interval and not 0.0 < value < 1.0:
        violations.append(Violation(name, value, 'must lie in (0, 1)'))
    elif not 0.0 <= value <= 1.0:
        violations.append(Violation(name, value, 'must lie in [0, 1]'))


def config_violations(cfg, ch, sec):
    """ Returns every violated invariant, sorted by field name. """
    violations = []

    # Intensities
    labels = sorted(k.label for k in cfg.intensities)
    if labels != list(INTENSITIES):
        violations.append(Violation('intensities', [k.label.name for k in cfg.intensities],
                                    'need exactly one mu, nu and omega entry'))
    else:
        mu, nu, omega = cfg.mu.mean, cfg.nu.mean, cfg.omega.mean
        for k in cfg.intensities:
            name = k.label.name.lower()
            if not (math.isfinite(k.mean) and k.mean >= 0):
                violations.append(Violation(name, k.mean, 'mean photon number must be >= 0'))
            _prob(violations, 'p_' + name, k.prob)
        if not mu > nu + omega:
            violations.append(Violation('mu', mu, 'need mu > nu + omega (nu=%g, omega=%g)' % (nu, omega)))
        if not 0 <= omega <= nu:
            violations.append(Violation('omega', omega, 'need 0 <= omega <= nu (nu=%g)' % nu))
        if not nu > omega:
            violations.append(Violation('nu', nu, 'need nu > omega for the decoy estimators'))
        total = sum(k.prob for k in cfg.intensities)
        if abs(total - 1.0) > 1e-12:
            violations.append(Violation('p_mu+p_nu+p_omega', total, 'must sum to 1'))

    # Choice probabilities
    for name in ('p_z_alice', 'p_x0', 'p_y0'):
        _prob(violations, name, getattr(cfg, name))
    state_total = cfg.p_z_alice + cfg.p_x0 + cfg.p_y0
    if abs(state_total - 1.0) > 1e-12:
        violations.append(Violation('p_z_alice+p_x0+p_y0', state_total, 'must sum to 1'))
    _prob(violations, 'p_z_bob', cfg.p_z_bob, open_interval=True)
    if int(cfg.n_total) != cfg.n_total or cfg.n_total < 1:
        violations.append(Violation('n_total', cfg.n_total, 'must be an integer >= 1'))
    elif cfg.n_total >= 2 ** 62:
        violations.append(Violation('n_total', cfg.n_total, 'overflows 64-bit counts'))
    if int(cfg.m_groups) != cfg.m_groups or cfg.m_groups < 1:
        violations.append(Violation('m_groups', cfg.m_groups, 'must be an integer >= 1'))

    # Channel
    for name in ('e0', 'e_d', 'eta_det'):
        _prob(violations, name, getattr(ch, name))
    for name in ('alpha', 'eta_z_db', 'eta_xy_db'):
        value = getattr(ch, name)
        if not (math.isfinite(value) and value >= 0):
            violations.append(Violation(name, value, 'loss must be >= 0'))
    if not (math.isfinite(ch.beta) and 0 <= ch.beta < 2 * math.pi):
        violations.append(Violation('beta', ch.beta, 'must lie in [0, 2pi)'))

    # Security
    for name in ('eps_bar', 'eps_ec', 'eps_pa'):
        _prob(violations, name, getattr(sec, name), open_interval=True)
    if not (math.isfinite(sec.f) and sec.f >= 1):
        violations.append(Violation('f', sec.f, 'error-correction efficiency must be >= 1'))

    return sorted(set(violations))


def validate_config(cfg, ch, sec):
    """ Returns (cfg, ch, sec) unchanged, or raises InvalidConfiguration listing all violations. """
    violations = config_violations(cfg, ch, sec)
    if violations:
        raise InvalidConfiguration(violations)
    return cfg, ch, sec


## TALLIES

@dataclass(frozen=True)
class Cell:
    sent: int
    n: int
    m: int


def _frozen_counts(values):
    arr = np.array(values, dtype=np.int64)
    if arr.shape != TALLY_SHAPE:
        raise InvalidTallies('tallies', 'expected shape %s, got %s' % (TALLY_SHAPE, arr.shape))
    arr.setflags(write=False)
    return arr


class ObservedTallies(object):
    """
    Detection and error counts for all 4 x 2 x 3 (state, basis, intensity) cells.

    Arrays are indexed [state, basis, intensity] and are read-only. `sent` counts the
    pulses of the cell's (state, intensity), whichever basis Bob chose.
    """

    __slots__ = ('sent', 'n', 'm')

    def __init__(self, sent, n, m):
        object.__setattr__(self, 'sent', _frozen_counts(sent))
        object.__setattr__(self, 'n', _frozen_counts(n))
        object.__setattr__(self, 'm', _frozen_counts(m))

    def __setattr__(self, key, value):
        raise AttributeError('ObservedTallies is immutable')

    def __reduce__(self):
        return (ObservedTallies, (self.sent, self.n, self.m))

    @classmethod
    def zeros(cls):
        z = np.zeros(TALLY_SHAPE, dtype=np.int64)
        return cls(z, z, z)

    def __eq__(self, other):
        if not isinstance(other, ObservedTallies):
            return NotImplemented
        return (np.array_equal(self.sent, other.sent) and np.array_equal(self.n, other.n)
                and np.array_equal(self.m, other.m))

    def __add__(self, other):
        return ObservedTallies(self.sent + other.sent, self.n + other.n, self.m + other.m)

    def __repr__(self):
        return 'ObservedTallies(sent=%d, detected=%d, errors=%d)' % (
            self.sent[:, 0, :].sum(), self.n.sum(), self.m.sum())

    @staticmethod
    def total(tallies):
        """ Cell-by-cell sum of a sequence of tallies """
        result = ObservedTallies.zeros()
        for t in tallies:
            result = result + t
        return result

    def cell(self, state, basis, intensity):
        idx = (int(state), int(basis), int(intensity))
        return Cell(int(self.sent[idx]), int(self.n[idx]), int(self.m[idx]))

    def iter_cells(self):
        """ Yields (state, basis, intensity, Cell) in label order """
        for s in STATES:
            for b in BASES:
                for k in INTENSITIES:
                    yield s, b, k, self.cell(s, b, k)

    def detections(self, states, basis):
        """ Per-intensity detections summed over the given states, measured in `basis` """
        return self.n[[int(s) for s in states], int(basis), :].sum(axis=0)

    def errors(self, states, basis):
        return self.m[[int(s) for s in states], int(basis), :].sum(axis=0)

    def qber(self, state, basis, intensity):
        c = self.cell(state, basis, intensity)
        return c.m / c.n if c.n else 0.0

    def violations(self):
        """ Names every cell breaking 0 <= m <= n <= sent """
        problems = []
        for s, b, k, c in self.iter_cells():
            if c.m < 0 or c.n < 0 or c.sent < 0:
                problems.append((cell_name(s, b, k), 'negative count'))
            elif c.m > c.n:
                problems.append((cell_name(s, b, k), 'errors %d exceed detections %d' % (c.m, c.n)))
            elif c.n > c.sent:
                problems.append((cell_name(s, b, k), 'detections %d exceed sent %d' % (c.n, c.sent)))
        return problems

    def check(self):
        problems = self.violations()
        if problems:
            raise InvalidTallies(*problems[0])
        return self


## ENTROPY

def binary_entropy(p):
    """ h(p) in bits, with h(0) = h(1) = 0 """
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError('probability outside [0, 1]: %r' % (p,))
    h = (entr(p) + entr(1.0 - p)) / math.log(2)
    return float(h) if h.ndim == 0 else h


## REPORT

@dataclass
class KeyRateReport:
    """
    Result of one decoy -> C44 -> key-length evaluation.

    key_rate is key_length / n_total; `intermediate` holds every named bound for audit.
    """
    s0_zz_lower: float
    s1_zz_lower: float
    c44_lower: float
    i_e: float
    e_zz: float
    n_zz: float
    key_length: float
    n_total: int
    raw_key_length: float = 0.0
    intermediate: Dict[str, float] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)
    failure_probability: float = 0.0
    groups: List['KeyRateReport'] = field(default_factory=list)

    @property
    def key_rate(self):
        return self.key_length / self.n_total if self.n_total else 0.0

    def add_flag(self, flag):
        if flag not in self.flags:
            self.flags.append(flag)

    def as_rows(self):
        """ (name, value) pairs in a fixed order, for printing and JSON """
        rows = [
            ('key_rate', self.key_rate),
            ('key_length', self.key_length),
            ('raw_key_length', self.raw_key_length),
            ('n_total', self.n_total),
            ('s0_zz_lower', self.s0_zz_lower),
            ('s1_zz_lower', self.s1_zz_lower),
            ('c44_lower', self.c44_lower),
            ('i_e', self.i_e),
            ('e_zz', self.e_zz),
            ('n_zz', self.n_zz),
            ('failure_probability', self.failure_probability),
        ]
        rows.extend(sorted(self.intermediate.items()))
        return rows

    def as_dict(self):
        data = dict(self.as_rows())
        data['flags'] = list(self.flags)
        if self.groups:
            data['groups'] = [g.as_dict() for g in self.groups]
        return data


def parse_label(enum_cls, text):
    """ Case-insensitive enum lookup used by the tally and config readers """
    key = str(text).strip().upper()
    aliases = {'SIGNAL': 'MU', 'DECOY': 'NU', 'VACUUM': 'OMEGA'}
    key = aliases.get(key, key)
    try:
        return enum_cls[key]
    except KeyError:
        raise ValueError('unknown %s %r' % (enum_cls.__name__, text))
