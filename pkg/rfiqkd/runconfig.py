"""
Run configuration: a flat JSON document whose keys carry their units.

    {"distance_km": 200, "n_total": 3e12, "mode": "analytic", "alpha_db_per_km": 0.19}

Missing keys take the defaults below; unknown keys are rejected. Every default records
where it comes from, printed by `manage.py point --show-defaults`.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Tuple

from rfiqkd.core import (AnalysisOptions, ChannelParams, IntensityClass, IntensityLabel,
                         InvalidConfiguration, ProtocolConfig, SecurityParams, Violation,
                         config_violations)
from rfiqkd.montecarlo import DriftKind, DriftModel

log = logging.getLogger(__name__)

CALIBRATION = 'system calibration'
OPERATING_POINT = 'operating point'
PROTOCOL = 'protocol'
EXPERIMENT = 'experiment'
CHOICE = 'choice'

MODES = ('analytic', 'montecarlo')


def _opt(default, source, help_text=''):
    return field(default=default, metadata={'source': source, 'help': help_text})


@dataclass(frozen=True)
class RunConfig:
    # channel
    e0: float = _opt(0.01, CALIBRATION, 'intrinsic error rate')
    alpha_db_per_km: float = _opt(0.19, CALIBRATION, 'fiber loss')
    eta_z_db: float = _opt(4.0, CALIBRATION, 'receiver Z path loss')
    eta_xy_db: float = _opt(9.0, CALIBRATION, 'receiver X/Y path loss')
    e_d: float = _opt(1.3e-7, CALIBRATION, 'dark count probability per pulse')
    eta_det: float = _opt(0.6, CALIBRATION, 'detector efficiency')
    beta_rad: float = _opt(0.0, CHOICE, 'reference-frame angle')
    # security
    f: float = _opt(1.1, CALIBRATION, 'error-correction efficiency')
    eps_bar: float = _opt(1e-10, CALIBRATION)
    eps_ec: float = _opt(1e-10, CALIBRATION)
    eps_pa: float = _opt(1e-10, CALIBRATION)
    # protocol
    p_z_alice: float = _opt(0.77, OPERATING_POINT)
    p_x0: Optional[float] = _opt(None, PROTOCOL, '(1 - p_z_alice) / 2 when unset')
    p_y0: Optional[float] = _opt(None, PROTOCOL, '(1 - p_z_alice) / 2 when unset')
    p_z_bob: float = _opt(0.5, CHOICE)
    mu: float = _opt(0.55, OPERATING_POINT, 'signal mean photon number')
    nu: float = _opt(0.28, OPERATING_POINT, 'decoy mean photon number')
    omega: float = _opt(0.0, OPERATING_POINT, 'vacuum mean photon number')
    p_mu: float = _opt(0.54, OPERATING_POINT)
    p_nu: float = _opt(0.36, OPERATING_POINT)
    p_omega: float = _opt(0.10, OPERATING_POINT)
    n_total: int = _opt(3 * 10 ** 12, EXPERIMENT, 'pulses sent')
    m_groups: int = _opt(1, CHOICE, 'rho groups')
    # scan
    distance_km: float = _opt(200.0, OPERATING_POINT)
    distance_min_km: float = _opt(0.0, CHOICE)
    distance_max_km: float = _opt(250.0, CHOICE)
    distance_step_km: float = _opt(10.0, CHOICE)
    n_values: Tuple[int, ...] = _opt((), CHOICE, 'extra block lengths for scan')
    # simulation
    mode: str = _opt('analytic', CHOICE, ' | '.join(MODES))
    seed: int = _opt(0, CHOICE)
    drift: str = _opt('fixed', CHOICE, ' | '.join(k.value for k in DriftKind))
    drift_rate_rad_per_s: Optional[float] = _opt(None, CHOICE, 'one full turn over the run when unset')
    drift_amplitude_rad: float = _opt(math.pi, CHOICE)
    drift_period_s: float = _opt(100.0, CHOICE)
    drift_jitter_rad: float = _opt(0.0, CHOICE)
    n_slices: int = _opt(100, CHOICE, 'time slices of a drifting run')
    slice_duration_s: float = _opt(1.0, EXPERIMENT)
    # estimator variants
    finite_key: bool = _opt(True, CHOICE)
    literal_paper_formulas: bool = _opt(False, CHOICE, 'printed forms with their typos')
    n_zz_all_intensities: bool = _opt(True, CHOICE)
    rho_negative_exponent: bool = _opt(False, CHOICE)

    ## READING

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def defaults(cls):
        """ (key, default, source, help) for every key """
        return [(f.name, f.default, f.metadata['source'], f.metadata['help']) for f in fields(cls)]

    @classmethod
    def from_mapping(cls, data, base=None):
        """ Overrides `base` (defaults if None) with `data`; rejects unknown keys and bad types """
        base = base or cls()
        types = {f.name: f.type for f in fields(cls)}
        violations, values = [], {}
        for key, value in sorted(data.items()):
            if key not in types:
                violations.append(Violation(key, value, 'unknown key'))
                continue
            try:
                values[key] = _coerce(types[key], value)
            except (TypeError, ValueError) as e:
                violations.append(Violation(key, value, str(e)))
        if violations:
            raise InvalidConfiguration(violations)
        return replace(base, **values)

    @classmethod
    def read_mapping(cls, path):
        """ The JSON object held by a run configuration file """
        with open(path) as fh:
            try:
                data = json.load(fh)
            except ValueError as e:
                raise InvalidConfiguration([Violation('config', path, 'not valid JSON: %s' % e)])
        if not isinstance(data, dict):
            raise InvalidConfiguration([Violation('config', path, 'must hold a JSON object')])
        log.debug('Loaded %d key(s) from %s', len(data), path)
        return data

    @classmethod
    def load(cls, path, base=None):
        return cls.from_mapping(cls.read_mapping(path), base)

    def as_dict(self):
        return {k: getattr(self, k) for k in self.keys()}

    ## DOMAIN OBJECTS

    def protocol_config(self, n_total=None):
        intensities = (IntensityClass(IntensityLabel.MU, self.mu, self.p_mu),
                       IntensityClass(IntensityLabel.NU, self.nu, self.p_nu),
                       IntensityClass(IntensityLabel.OMEGA, self.omega, self.p_omega))
        return ProtocolConfig(intensities=intensities, p_z_alice=self.p_z_alice, p_x0=self.p_x0,
                              p_y0=self.p_y0, p_z_bob=self.p_z_bob,
                              n_total=self.n_total if n_total is None else n_total,
                              m_groups=self.m_groups)

    def channel_params(self):
        return ChannelParams(e0=self.e0, alpha=self.alpha_db_per_km, eta_z_db=self.eta_z_db,
                             eta_xy_db=self.eta_xy_db, e_d=self.e_d, eta_det=self.eta_det,
                             beta=self.beta_rad)

    def security_params(self):
        return SecurityParams(eps_bar=self.eps_bar, eps_ec=self.eps_ec, eps_pa=self.eps_pa, f=self.f)

    def analysis_options(self):
        return AnalysisOptions(finite_key=self.finite_key,
                               literal_paper_formulas=self.literal_paper_formulas,
                               n_zz_all_intensities=self.n_zz_all_intensities,
                               rho_negative_exponent=self.rho_negative_exponent)

    def drift_model(self):
        kind = DriftKind(self.drift)
        rate = self.drift_rate_rad_per_s
        if rate is None:
            rate = 2 * math.pi / (self.n_slices * self.slice_duration_s)
        return DriftModel(kind, beta0=self.beta_rad, rate=rate, amplitude=self.drift_amplitude_rad,
                          period=self.drift_period_s, jitter=self.drift_jitter_rad)

    def distances(self):
        """ distance_min_km..distance_max_km inclusive; empty when min > max """
        if self.distance_min_km > self.distance_max_km:
            return []
        count = int(math.floor((self.distance_max_km - self.distance_min_km) / self.distance_step_km + 1e-9))
        return [self.distance_min_km + i * self.distance_step_km for i in range(count + 1)]

    ## VALIDATION

    def violations(self):
        problems = list(config_violations(self.protocol_config(), self.channel_params(), self.security_params()))
        if self.mode not in MODES:
            problems.append(Violation('mode', self.mode, 'must be one of %s' % ', '.join(MODES)))
        if self.drift not in [k.value for k in DriftKind]:
            problems.append(Violation('drift', self.drift, 'unknown drift model'))
        if self.distance_km < 0:
            problems.append(Violation('distance_km', self.distance_km, 'must be >= 0'))
        if self.distance_min_km < 0:
            problems.append(Violation('distance_min_km', self.distance_min_km, 'must be >= 0'))
        if not self.distance_step_km > 0:
            problems.append(Violation('distance_step_km', self.distance_step_km, 'must be > 0'))
        if self.n_slices < 1:
            problems.append(Violation('n_slices', self.n_slices, 'must be >= 1'))
        if not self.slice_duration_s > 0:
            problems.append(Violation('slice_duration_s', self.slice_duration_s, 'must be > 0'))
        for n in self.n_values:
            if n < 1:
                problems.append(Violation('n_values', n, 'block lengths must be >= 1'))
        return sorted(set(problems))

    def validate(self):
        problems = self.violations()
        if problems:
            raise InvalidConfiguration(problems)
        return self


def _coerce(kind, value):
    """ Converts a JSON value to the declared field type """
    if kind in ('bool', bool):
        if not isinstance(value, bool):
            raise TypeError('expected true or false')
        return value
    if kind in ('int', int):
        return _as_int(value)
    if kind in ('float', float):
        return _as_float(value)
    if kind == 'Optional[float]':
        return None if value is None else _as_float(value)
    if kind == 'Tuple[int, ...]':
        if not isinstance(value, (list, tuple)):
            raise TypeError('expected a list of integers')
        return tuple(_as_int(v) for v in value)
    if kind in ('str', str):
        if not isinstance(value, str):
            raise TypeError('expected a string')
        return value
    raise TypeError('unsupported field type %s' % kind)


def _as_float(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError('expected a number')
    return float(value)


def _as_int(value):
    # 3e12 arrives as a float
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError('expected an integer')
    if isinstance(value, float) and not (math.isfinite(value) and value == int(value)):
        raise ValueError('expected an integer, got %r' % value)
    return int(value)
