"""
Plain CSV tally files.

One row per (state, basis, intensity) cell:

    state,basis,intensity,sent,detected,errors
    Z0,Z,mu,...

Slice files add a leading `slice` column and hold one block of rows per time slice.
Monte Carlo runs may append the photon-number columns s0, s1 and t1 (detections from
vacuum and single-photon emissions, single-photon errors); readers ignore them.
`sent` is the pulse count of the cell's (state, intensity) and must agree between
the Z and X rows.
"""
from __future__ import annotations

import csv
import logging
from collections import OrderedDict

import numpy as np

from rfiqkd.core import (BASES, INTENSITIES, STATES, TALLY_SHAPE, BasisLabel, IntensityLabel,
                         InvalidTallies, ObservedTallies, StateLabel, TallyFileError, cell_name,
                         parse_label)

log = logging.getLogger(__name__)

HEADER = ['state', 'basis', 'intensity', 'sent', 'detected', 'errors']
SLICE_HEADER = ['slice'] + HEADER
ORACLE_COLUMNS = ['s0', 's1', 't1']


## WRITING

def _rows(tallies, oracle=None):
    for s, b, k, c in tallies.iter_cells():
        row = [s.name, b.name, k.name.lower(), c.sent, c.n, c.m]
        if oracle is not None:
            idx = (int(s), int(b), int(k))
            by_photon = oracle.detected_by_photon[idx]
            row += [int(by_photon[0]), int(by_photon[1]) if by_photon.size > 1 else 0,
                    int(oracle.errors_by_photon[idx][1]) if by_photon.size > 1 else 0]
        yield row


def write_tallies(fh, tallies, oracle=False):
    """ Writes one block. `tallies` may be ObservedTallies or OracleTallies. """
    data = getattr(tallies, 'tallies', tallies)
    with_oracle = oracle and hasattr(tallies, 'detected_by_photon')
    writer = csv.writer(fh, lineterminator='\n')
    writer.writerow(HEADER + (ORACLE_COLUMNS if with_oracle else []))
    writer.writerows(_rows(data, tallies if with_oracle else None))


def write_slices(fh, slices, oracle=False):
    """ Writes a slice file, slices numbered from 0 in the given order """
    slices = list(slices)
    with_oracle = oracle and bool(slices) and hasattr(slices[0], 'detected_by_photon')
    writer = csv.writer(fh, lineterminator='\n')
    writer.writerow(SLICE_HEADER + (ORACLE_COLUMNS if with_oracle else []))
    for index, item in enumerate(slices):
        data = getattr(item, 'tallies', item)
        for row in _rows(data, item if with_oracle else None):
            writer.writerow([index] + row)


## READING

class _Block(object):
    """ Cells of one tally block while a file is being read """

    def __init__(self):
        self.sent = np.zeros(TALLY_SHAPE, dtype=np.int64)
        self.n = np.zeros(TALLY_SHAPE, dtype=np.int64)
        self.m = np.zeros(TALLY_SHAPE, dtype=np.int64)
        self.seen = set()

    def add(self, path, line, offset, cell, counts):
        if cell in self.seen:
            raise TallyFileError(path, line, offset + 1, 'duplicate cell %s' % cell_name(*cell))
        self.seen.add(cell)
        self.sent[cell], self.n[cell], self.m[cell] = counts

    def build(self, path, label=''):
        for s in STATES:
            for b in BASES:
                for k in INTENSITIES:
                    if (s, b, k) not in self.seen:
                        raise InvalidTallies(label + cell_name(s, b, k), 'missing from %s' % path)
        for s in STATES:
            for k in INTENSITIES:
                z, x = self.sent[s, BasisLabel.Z, k], self.sent[s, BasisLabel.X, k]
                if z != x:
                    raise InvalidTallies(label + cell_name(s, BasisLabel.X, k),
                                         'sent %d differs from the Z row (%d)' % (x, z))
        tallies = ObservedTallies(self.sent, self.n, self.m)
        problems = tallies.violations()
        if problems:
            cell, message = problems[0]
            raise InvalidTallies(label + cell, message)
        return tallies


def _parse_row(path, line, row, offset):
    """ ((state, basis, intensity), (sent, detected, errors)) from one CSV row """
    labels = []
    for column, enum_cls in enumerate((StateLabel, BasisLabel, IntensityLabel)):
        try:
            labels.append(parse_label(enum_cls, row[offset + column]))
        except ValueError as e:
            raise TallyFileError(path, line, offset + column + 1, str(e))
    counts = []
    for column in range(3, 6):
        text = row[offset + column].strip()
        try:
            value = int(text)
        except ValueError:
            try:
                # 1e+06 style from spreadsheets
                as_float = float(text)
            except ValueError:
                raise TallyFileError(path, line, offset + column + 1, 'not an integer: %r' % text)
            if as_float != int(as_float):
                raise TallyFileError(path, line, offset + column + 1, 'not an integer: %r' % text)
            value = int(as_float)
        if value < 0:
            raise TallyFileError(path, line, offset + column + 1, 'negative count %d' % value)
        counts.append(value)
    return tuple(labels), tuple(counts)


def _read(path):
    """ OrderedDict slice -> ObservedTallies; plain files give the single key None """
    blocks = OrderedDict()
    with open(path, newline='') as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise TallyFileError(path, 1, 1, 'empty file')
        if header[:len(SLICE_HEADER)] == SLICE_HEADER:
            offset = 1
        elif header[:len(HEADER)] == HEADER:
            offset = 0
        else:
            raise TallyFileError(path, 1, 1, 'expected header %s' % ','.join(HEADER))
        width = len(header)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise TallyFileError(path, line, min(len(row), width) + 1,
                                     'expected %d columns, got %d' % (width, len(row)))
            key = None
            if offset:
                try:
                    key = int(row[0])
                except ValueError:
                    raise TallyFileError(path, line, 1, 'slice index must be an integer: %r' % row[0])
            cell, counts = _parse_row(path, line, row, offset)
            blocks.setdefault(key, _Block()).add(path, line, offset, cell, counts)
    if not blocks:
        raise TallyFileError(path, 2, 1, 'no tally rows')
    return OrderedDict((key, block.build(path, '' if key is None else 'slice %d ' % key))
                       for key, block in blocks.items())


def read_tallies(path):
    """ One ObservedTallies; slice files are summed """
    blocks = _read(path)
    return ObservedTallies.total(blocks.values())


def read_slices(path):
    """ List of ObservedTallies in slice order; a plain file is one slice """
    blocks = _read(path)
    log.debug('Read %d slice(s) from %s', len(blocks), path)
    return [blocks[k] for k in sorted(blocks, key=lambda k: -1 if k is None else k)]
