"""
Command to evaluate the secret key rate at one distance and print every bound.

    manage.py point --distance=200 --n-total=3e12
    manage.py point --config=run.json --mode=montecarlo --seed=7 --out=report.json
    manage.py point --mode=montecarlo --drift=linear --groups=6 --n-total=1e11 --distance=50

The analytic mode evaluates the expected statistics; the Monte Carlo mode samples them.
A drift model or --groups above 1 splits the run into time slices that are grouped by
their classification angle rho before extraction.

--dump-tallies writes the tallies that were analysed, in the format read by `process`.
--out writes the report as JSON.

Exit status is 0 with a positive key, 2 when no key can be extracted and 1 on error.
Set verbosity to 0 (e.g. '-v0') to print the report only, 2 to add the configuration
and per-group reports, 3 to add debug logging.
"""
from django.core.management import BaseCommand, CommandError

from rfiqkd.core import RfiError
from rfiqkd.management.commands import RfiQkdHelper
from rfiqkd.tallyfile import write_slices, write_tallies


class Command(BaseCommand):
    """
    Evaluate the decoy -> C44 -> key length pipeline at one distance
    """

    help = 'Evaluate the secret key rate at one distance and print every bound'

    def add_arguments(self, parser):
        RfiQkdHelper.add_run_arguments(parser)
        parser.add_argument('--out', dest='out', default=None,
                            help='Write the report as JSON to this file')
        parser.add_argument('--dump-tallies', dest='dump_tallies', default=None,
                            help='Write the analysed tallies as a CSV tally file')

    ## POINT COMMAND LINE HANDLER

    def handle(self, *args, **options):
        self.verbosity = int(options['verbosity'])
        RfiQkdHelper.configure_logging(self.verbosity)
        if options['show_defaults']:
            RfiQkdHelper.show_defaults(self.stdout)
            return

        run = RfiQkdHelper.run_config(options)
        if self.verbosity >= 2:
            for key, value in sorted(run.as_dict().items()):
                self.stdout.write('# %s = %r' % (key, value))

        try:
            report, data = RfiQkdHelper.evaluate(run, run.distance_km, RfiQkdHelper.workers(options))
        except RfiError as e:
            raise CommandError(str(e))

        if options['dump_tallies']:
            with open(options['dump_tallies'], 'w', newline='') as fh:
                if isinstance(data, list):
                    write_slices(fh, data)
                else:
                    write_tallies(fh, data)
        if options['out']:
            RfiQkdHelper.write_json(options['out'], report)

        self.stdout.write('distance_km            = %s' % RfiQkdHelper.format_float(run.distance_km))
        RfiQkdHelper.write_report(self.stdout, report, self.verbosity)
        RfiQkdHelper.finish(report)
