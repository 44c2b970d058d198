"""
Command to sample Monte Carlo tallies and write them as a CSV tally file.

    manage.py simulate --distance=50 --n-total=1e10 --seed=3 --out=tallies.csv
    manage.py simulate --drift=linear --n-slices=100 --n-total=1e11 --oracle --out=slices.csv

A drift model (or --groups above 1) writes a slice file with one block per time slice.
--oracle appends the photon-number columns s0, s1 and t1, which `process` ignores.
Without --out the file goes to stdout.
"""
from django.core.management import BaseCommand, CommandError

from rfiqkd.core import RfiError
from rfiqkd.management.commands import RfiQkdHelper
from rfiqkd.runconfig import RunConfig
from rfiqkd.tallyfile import write_slices, write_tallies


class Command(BaseCommand):
    """
    Sample tallies for one distance in Monte Carlo mode
    """

    help = 'Sample Monte Carlo tallies and write a CSV tally file'

    def add_arguments(self, parser):
        RfiQkdHelper.add_run_arguments(parser)
        parser.add_argument('--out', dest='out', default=None,
                            help='Tally file to write (default: stdout)')
        parser.add_argument('--oracle', dest='oracle', action='store_true', default=False,
                            help='Append the s0, s1 and t1 photon-number columns')

    def handle(self, *args, **options):
        self.verbosity = int(options['verbosity'])
        RfiQkdHelper.configure_logging(self.verbosity)
        if options['show_defaults']:
            RfiQkdHelper.show_defaults(self.stdout)
            return

        run = RfiQkdHelper.run_config(options)
        try:
            run = RunConfig.from_mapping({'mode': 'montecarlo'}, base=run)
            data = RfiQkdHelper.sample(run, run.distance_km, RfiQkdHelper.workers(options))
        except RfiError as e:
            raise CommandError(str(e))

        write = write_slices if isinstance(data, list) else write_tallies
        if options['out']:
            with open(options['out'], 'w', newline='') as fh:
                write(fh, data, oracle=options['oracle'])
        else:
            write(self.stdout, data, oracle=options['oracle'])

        if self.verbosity >= 1 and options['out']:
            count = len(data) if isinstance(data, list) else 1
            self.stderr.write('%d block(s) written to %s' % (count, options['out']))
