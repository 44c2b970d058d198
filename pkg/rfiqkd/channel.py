"""
Analytic expected-statistics model of the fiber, the passive Z/X receiver and the
threshold detectors.

Gain of intensity k on a path with efficiency eta:   Q = 1 - (1 - e_d) exp(-eta k)
Error probability per detection:                     E = [e_d/2 + e_mis (1 - exp(-eta k))] / Q

e_mis is the single-photon misalignment error of the (state, basis) cell. The X-basis
errors follow Bob's rotated frame X_B = cos(beta) X_A + sin(beta) Y_A; the Z basis is
taken as well aligned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rfiqkd.core import (BASES, INTENSITIES, STATES, BasisLabel, IntensityClass,
                         ObservedTallies, StateLabel)


@dataclass(frozen=True)
class CellExpectation:
    gain: float
    qber: float


def transmittance(distance_km, path, ch):
    """ Overall efficiency of fiber, receiver path and detector """
    if distance_km < 0:
        raise ValueError('distance must be >= 0, got %r' % distance_km)
    path_loss_db = ch.eta_z_db if BasisLabel(path) == BasisLabel.Z else ch.eta_xy_db
    return 10.0 ** (-(ch.alpha * distance_km + path_loss_db) / 10.0) * ch.eta_det


def misalignment_error(state, basis, beta, e0):
    """ Single-photon error probability of a cell before dark counts """
    state, basis = StateLabel(state), BasisLabel(basis)
    visibility = 1.0 - 2.0 * e0
    if basis == BasisLabel.Z:
        if state in (StateLabel.Z0, StateLabel.Z1):
            return e0
        # X0/Y0 in the Z basis give a random bit
        return 0.5
    if state in (StateLabel.Z0, StateLabel.Z1):
        return 0.5
    if state == StateLabel.X0:
        return (1.0 - visibility * math.cos(beta)) / 2.0
    return (1.0 - visibility * math.sin(beta)) / 2.0


def gain_and_error_yield(eta, k_mean, e_d, e_mis):
    """ (gain, error yield) of intensity k_mean on a path of efficiency eta """
    click = -np.expm1(-eta * k_mean)
    gain = 1.0 - (1.0 - e_d) * np.exp(-eta * k_mean)
    return gain, e_d / 2.0 + e_mis * click


def cell_expectation(state, basis, k, distance_km, ch):
    """
    Expected gain and error rate of one cell.

    :param k: IntensityClass (or a bare mean photon number)
    """
    k_mean = float(k.mean) if isinstance(k, IntensityClass) else float(k)
    eta = transmittance(distance_km, basis, ch)
    e_mis = misalignment_error(state, basis, ch.beta, ch.e0)
    gain, error_yield = gain_and_error_yield(eta, k_mean, ch.e_d, e_mis)
    gain, error_yield = float(gain), float(error_yield)
    # No clicks at all (noiseless vacuum): report a random bit
    qber = error_yield / gain if gain > 0 else 0.5
    return CellExpectation(gain=gain, qber=min(qber, 1.0))


def expected_rates(cfg, ch, distance_km):
    """
    Real-valued expected (sent, detected, errors) arrays indexed [state, basis, intensity].
    """
    probs = cfg.probs
    sent = np.zeros((len(STATES), len(BASES), len(INTENSITIES)))
    detected = np.zeros_like(sent)
    errors = np.zeros_like(sent)
    for s in STATES:
        for b in BASES:
            for k in INTENSITIES:
                exp = cell_expectation(s, b, cfg.means[k], distance_km, ch)
                sent[s, b, k] = cfg.n_total * cfg.state_prob(s) * probs[k]
                detected[s, b, k] = sent[s, b, k] * cfg.basis_prob(b) * exp.gain
                errors[s, b, k] = detected[s, b, k] * exp.qber
    return sent, detected, errors


def expected_tallies(cfg, ch, distance_km):
    """ Expected tallies rounded to the nearest integer """
    sent, detected, errors = expected_rates(cfg, ch, distance_km)
    return ObservedTallies(np.rint(sent), np.rint(detected), np.rint(errors))
