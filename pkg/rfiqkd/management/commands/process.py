"""
Command to extract a secret key from recorded tallies.

    manage.py process tallies.csv
    manage.py process slices.csv --groups=6 --distance=50 --config=run.json

The file holds one row per (state, basis, intensity) cell with columns
state,basis,intensity,sent,detected,errors. A leading `slice` column makes it a slice
file; with --groups above 1 the slices are classified by rho and analysed per group.
The intensities, probabilities and security parameters come from --config or the
defaults. With --literal-paper-formulas the slices are classified by the printed rho
formula, which needs the channel parameters and --distance.

Exit status is 0 with a positive key, 2 when no key can be extracted and 1 on error.
"""
from django.core.management import BaseCommand, CommandError

from rfiqkd.core import RfiError
from rfiqkd.management.commands import RfiQkdHelper
from rfiqkd.tallyfile import read_slices


class Command(BaseCommand):
    """
    Run decoy -> C44 -> key length on a tally file
    """

    help = 'Extract a secret key from a CSV tally file'

    def add_arguments(self, parser):
        parser.add_argument('tally_file', help='CSV tally file or slice file')
        RfiQkdHelper.add_run_arguments(parser, simulation=False)
        parser.add_argument('--out', dest='out', default=None,
                            help='Write the report as JSON to this file')

    def handle(self, *args, **options):
        self.verbosity = int(options['verbosity'])
        RfiQkdHelper.configure_logging(self.verbosity)
        if options['show_defaults']:
            RfiQkdHelper.show_defaults(self.stdout)
            return

        run = RfiQkdHelper.run_config(options)
        try:
            if (run.m_groups > 1 and run.literal_paper_formulas
                    and 'distance_km' not in RfiQkdHelper.given_keys(options)):
                raise CommandError('--groups=%d with the printed rho classifier needs --distance '
                                   'or distance_km in --config' % run.m_groups)
            slices = read_slices(options['tally_file'])
            if len(slices) == 1 and run.m_groups == 1:
                data = slices[0]
            else:
                data = slices
            report = RfiQkdHelper.analyse(run, data, run.distance_km, RfiQkdHelper.workers(options))
        except (RfiError, OSError) as e:
            raise CommandError(str(e))

        if self.verbosity >= 2:
            self.stdout.write('# %d slice(s) read from %s' % (len(slices), options['tally_file']))
        if options['out']:
            RfiQkdHelper.write_json(options['out'], report)
        RfiQkdHelper.write_report(self.stdout, report, self.verbosity)
        RfiQkdHelper.finish(report)
