"""
Monte Carlo tallies with photon-number ground truth, and synthetic drift of the
reference-frame angle beta.

Sampling is per cell, never per pulse:
  1. multinomial split of the slice's pulses over (state, intensity),
  2. Poisson photon numbers (multinomial over 0..cap, tail mass folded into cap),
  3. binomial choice of Bob's basis,
  4. binomial detection with yield Y_n = 1 - (1 - e_d)(1 - eta)^n,
  5. binomial error assignment with error yield e_d/2 + e_mis (1 - (1 - eta)^n).

Random streams: numpy SeedSequence(seed, spawn_key=(slice, cell)). Cell 0 is the
multinomial split; cell 1 + 3*state + intensity draws everything else for that
(state, intensity). Slices are reproducible alone, in sequence or in parallel.
"""
from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, partial
from typing import Tuple

import numpy as np
from scipy import stats

from rfiqkd.channel import misalignment_error, transmittance
from rfiqkd.core import (BASES, INTENSITIES, STATES, TALLY_SHAPE, InvalidConfiguration,
                         ObservedTallies, Violation)

log = logging.getLogger(__name__)

POISSON_TAIL = 1e-12
MAX_PULSES = 2 ** 62
# slice index reserved for the drift jitter stream
JITTER_SLICE = 2 ** 32


def stream(seed, slice_index, cell_index):
    """ Generator for one (seed, slice, cell) stream """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(slice_index), int(cell_index)))
    return np.random.Generator(np.random.PCG64(sequence))


@lru_cache(maxsize=64)
def photon_cap(mean, tail=POISSON_TAIL):
    """ Smallest n with P(photons > n) < tail """
    if mean <= 0:
        return 0
    n = int(stats.poisson.ppf(1.0 - 1e-6, mean))
    while stats.poisson.sf(n, mean) >= tail:
        n += 1
    return n


def photon_distribution(mean):
    """ Poisson pmf over 0..cap with the tail mass assigned to cap """
    cap = photon_cap(float(mean))
    if cap == 0:
        return np.array([1.0])
    pmf = stats.poisson.pmf(np.arange(cap + 1), mean)
    pmf[cap] = stats.poisson.sf(cap - 1, mean)
    return pmf / pmf.sum()


## ORACLE TALLIES

@dataclass(frozen=True)
class OracleTallies:
    """
    ObservedTallies plus detections and errors split by emitted photon number.

    detected_by_photon and errors_by_photon are indexed [state, basis, intensity, photons].
    """
    tallies: ObservedTallies
    detected_by_photon: np.ndarray
    errors_by_photon: np.ndarray

    def __add__(self, other):
        width = max(self.detected_by_photon.shape[-1], other.detected_by_photon.shape[-1])
        return OracleTallies(self.tallies + other.tallies,
                             _pad(self.detected_by_photon, width) + _pad(other.detected_by_photon, width),
                             _pad(self.errors_by_photon, width) + _pad(other.errors_by_photon, width))

    def _photon_count(self, array, states, basis, photons):
        if photons >= array.shape[-1]:
            return 0
        return int(array[[int(s) for s in states], int(basis), :, photons].sum())

    def vacuum_detections(self, states, basis):
        return self._photon_count(self.detected_by_photon, states, basis, 0)

    def single_photon_detections(self, states, basis):
        return self._photon_count(self.detected_by_photon, states, basis, 1)

    def single_photon_errors(self, states, basis):
        return self._photon_count(self.errors_by_photon, states, basis, 1)

    def is_consistent(self):
        """ Photon-number partitions add up to the visible counts """
        return (np.array_equal(self.detected_by_photon.sum(axis=-1), self.tallies.n)
                and np.array_equal(self.errors_by_photon.sum(axis=-1), self.tallies.m))


def _pad(array, width):
    if array.shape[-1] == width:
        return array
    pad = [(0, 0)] * (array.ndim - 1) + [(0, width - array.shape[-1])]
    return np.pad(array, pad)


def sample_tallies(cfg, ch, distance_km, seed, slice_index=0):
    """
    Samples one block of cfg.n_total pulses.

    :returns: OracleTallies whose expectation equals channel.expected_tallies()
    """
    if not 0 <= cfg.n_total < MAX_PULSES:
        raise InvalidConfiguration([Violation('n_total', cfg.n_total, 'overflows 64-bit counts')])

    means, probs = cfg.means, cfg.probs
    pvals = np.array([cfg.state_prob(s) * probs[k] for s in STATES for k in INTENSITIES])
    split = stream(seed, slice_index, 0).multinomial(int(cfg.n_total), pvals / pvals.sum())
    split = split.reshape(len(STATES), len(INTENSITIES))

    width = 1 + max(photon_cap(float(m)) for m in means)
    sent = np.zeros(TALLY_SHAPE, dtype=np.int64)
    detected = np.zeros(TALLY_SHAPE + (width,), dtype=np.int64)
    errors = np.zeros_like(detected)
    eta = {b: transmittance(distance_km, b, ch) for b in BASES}

    for s in STATES:
        for k in INTENSITIES:
            rng = stream(seed, slice_index, 1 + len(INTENSITIES) * int(s) + int(k))
            pmf = photon_distribution(means[k])
            photons = rng.multinomial(split[s, k], pmf)
            in_z = rng.binomial(photons, cfg.p_z_bob)
            by_basis = {BASES[0]: in_z, BASES[1]: photons - in_z}
            ns = np.arange(len(pmf))
            for b in BASES:
                e_mis = misalignment_error(s, b, ch.beta, ch.e0)
                miss = (1.0 - eta[b]) ** ns
                yield_n = 1.0 - (1.0 - ch.e_d) * miss
                error_yield = ch.e_d / 2.0 + e_mis * (1.0 - miss)
                with np.errstate(divide='ignore', invalid='ignore'):
                    p_error = np.where(yield_n > 0, error_yield / yield_n, 0.5)
                det = rng.binomial(by_basis[b], yield_n)
                err = rng.binomial(det, np.clip(p_error, 0.0, 1.0))
                sent[s, b, k] = split[s, k]
                detected[s, b, k, :len(pmf)] = det
                errors[s, b, k, :len(pmf)] = err

    tallies = ObservedTallies(sent, detected.sum(axis=-1), errors.sum(axis=-1))
    return OracleTallies(tallies, detected, errors)


## DRIFT

class DriftKind(enum.Enum):
    FIXED = 'fixed'
    LINEAR = 'linear'
    SINUSOIDAL = 'sinusoidal'


@dataclass(frozen=True)
class DriftModel:
    """
    beta(t) for t = slice_index * slice_duration seconds.

    rate is in rad/s, period in seconds; jitter is the std-dev of Gaussian noise added
    per slice.
    """
    kind: DriftKind = DriftKind.FIXED
    beta0: float = 0.0
    rate: float = 0.0
    amplitude: float = 0.0
    period: float = 1.0
    jitter: float = 0.0

    @classmethod
    def full_turn(cls, n_slices, slice_duration=1.0, beta0=0.0):
        """ Linear drift sweeping one full turn over the run """
        return cls(DriftKind.LINEAR, beta0=beta0, rate=2 * math.pi / (n_slices * slice_duration))


@dataclass(frozen=True)
class DriftTrace:
    betas: Tuple[float, ...]
    slice_duration: float
    pulses_per_slice: int

    @property
    def n_slices(self):
        return len(self.betas)

    @property
    def n_total(self):
        return self.n_slices * self.pulses_per_slice

    def __iter__(self):
        return iter(enumerate(self.betas))


def drift_beta(model, n_slices, pulses_per_slice=1, slice_duration=1.0, seed=0):
    """ Evaluates a drift model on n_slices time slices, wrapped into [0, 2pi) """
    if n_slices < 1:
        raise ValueError('n_slices must be >= 1')
    t = np.arange(n_slices) * float(slice_duration)
    kind = DriftKind(model.kind)
    if kind == DriftKind.FIXED:
        beta = np.full(n_slices, model.beta0, dtype=float)
    elif kind == DriftKind.LINEAR:
        beta = model.beta0 + model.rate * t
    else:
        beta = model.beta0 + model.amplitude * np.sin(2 * math.pi * t / model.period)
    if model.jitter > 0:
        beta = beta + stream(seed, JITTER_SLICE, 0).normal(0.0, model.jitter, n_slices)
    beta = np.mod(beta, 2 * math.pi)
    # mod can round up to exactly 2pi for tiny negative inputs
    beta[beta >= 2 * math.pi] = 0.0
    return DriftTrace(tuple(float(b) for b in beta), float(slice_duration), int(pulses_per_slice))


def _sample_slice(cfg, ch, distance_km, seed, item):
    index, beta = item
    return sample_tallies(cfg, ch.with_beta(beta), distance_km, seed, slice_index=index)


def sample_drifting_tallies(cfg, ch, distance_km, trace, seed, workers=1):
    """ One OracleTallies per slice, slice i sampled with beta = trace.betas[i] """
    if trace.n_total != cfg.n_total:
        raise InvalidConfiguration([Violation(
            'n_total', cfg.n_total,
            'drift trace holds %d slices x %d pulses' % (trace.n_slices, trace.pulses_per_slice))])
    slice_cfg = cfg.with_total(trace.pulses_per_slice)
    job = partial(_sample_slice, slice_cfg, ch, distance_km, seed)
    log.debug('Sampling %d slices of %d pulses with %d worker(s)',
              trace.n_slices, trace.pulses_per_slice, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, list(trace)))
    return [job(item) for item in trace]
