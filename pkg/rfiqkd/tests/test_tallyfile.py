import os
import shutil
import tempfile

from django.test import SimpleTestCase

from rfiqkd.channel import expected_tallies
from rfiqkd.core import (BASES, INTENSITIES, STATES, ChannelParams, InvalidTallies, ObservedTallies,
                         ProtocolConfig, TallyFileError)
from rfiqkd.montecarlo import sample_tallies
from rfiqkd.tallyfile import read_slices, read_tallies, write_slices, write_tallies


def _rows(detected=1000, errors=10, sent=10 ** 6):
    rows = []
    for s in STATES:
        for b in BASES:
            for k in INTENSITIES:
                rows.append([s.name, b.name, k.name.lower(), str(sent), str(detected), str(errors)])
    return rows


class TallyFileTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def _path(self, name='tallies.csv'):
        return os.path.join(self.tmp, name)

    def _write_rows(self, rows, header='state,basis,intensity,sent,detected,errors'):
        path = self._path()
        with open(path, 'w') as fh:
            fh.write(header + '\n')
            for row in rows:
                fh.write(','.join(row) + '\n')
        return path

    def test_round_trip(self):
        tallies = expected_tallies(ProtocolConfig(), ChannelParams(), 100)
        with open(self._path(), 'w') as fh:
            write_tallies(fh, tallies)
        self.assertEqual(read_tallies(self._path()), tallies)
        self.assertEqual(read_slices(self._path()), [tallies])

    def test_slices(self):
        cfg = ProtocolConfig(n_total=10 ** 9)
        slices = [expected_tallies(cfg, ChannelParams(beta=beta), 50) for beta in (0.0, 1.0, 2.0)]
        with open(self._path(), 'w') as fh:
            write_slices(fh, slices)
        self.assertEqual(read_slices(self._path()), slices)
        self.assertEqual(read_tallies(self._path()), ObservedTallies.total(slices))

    def test_oracle_columns_ignored(self):
        o = sample_tallies(ProtocolConfig(n_total=10 ** 6), ChannelParams(), 20, seed=1)
        with open(self._path(), 'w') as fh:
            write_tallies(fh, o, oracle=True)
        with open(self._path()) as fh:
            self.assertTrue(fh.readline().strip().endswith('s0,s1,t1'))
        self.assertEqual(read_tallies(self._path()), o.tallies)

    def test_labels_are_case_insensitive(self):
        rows = _rows()
        for row in rows:
            row[0], row[2] = row[0].lower(), row[2].upper()
        self.assertEqual(read_tallies(self._write_rows(rows)).cell(0, 0, 0).n, 1000)

    def test_float_notation_accepted(self):
        rows = _rows()
        rows[0][3] = '1e+06'
        self.assertEqual(read_tallies(self._write_rows(rows)).cell(0, 0, 0).sent, 10 ** 6)

    def test_errors_exceeding_detections(self):
        rows = _rows()
        rows[0][5] = '1001'
        with self.assertRaises(InvalidTallies) as cm:
            read_tallies(self._write_rows(rows))
        self.assertEqual(cm.exception.cell, '(Z0,Z,mu)')

    def test_bad_integer(self):
        rows = _rows()
        rows[1][4] = 'abc'
        with self.assertRaises(TallyFileError) as cm:
            read_tallies(self._write_rows(rows))
        self.assertEqual((cm.exception.line, cm.exception.column), (3, 5))

    def test_missing_cell(self):
        with self.assertRaises(InvalidTallies) as cm:
            read_tallies(self._write_rows(_rows()[:-1]))
        self.assertEqual(cm.exception.cell, '(Y0,X,omega)')

    def test_sent_mismatch(self):
        rows = _rows()
        rows[3][3] = '999999'
        with self.assertRaises(InvalidTallies) as cm:
            read_tallies(self._write_rows(rows))
        self.assertEqual(cm.exception.cell, '(Z0,X,mu)')

    def test_duplicate_cell(self):
        rows = _rows()
        rows.append(list(rows[0]))
        with self.assertRaises(TallyFileError) as cm:
            read_tallies(self._write_rows(rows))
        self.assertIn('duplicate', str(cm.exception))

    def test_header_and_empty_file(self):
        with self.assertRaises(TallyFileError):
            read_tallies(self._write_rows(_rows(), header='a,b,c'))
        open(self._path(), 'w').close()
        with self.assertRaises(TallyFileError) as cm:
            read_tallies(self._path())
        self.assertEqual(cm.exception.line, 1)
