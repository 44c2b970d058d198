"""
Command to sweep the key rate over distance and write CSV for plotting.

    manage.py scan --distance-min=0 --distance-max=250 --distance-step=10 --n-total=1e13 -v0 > scan.csv
    manage.py scan --n-values=1e11,1e12,1e13 -v0 > family.csv

Columns: distance_km, n_total, key_rate, c44_lower, e_zz, s1_lower, flags. Rows are
ordered by block length, then distance. The rate column is clamped at 0; degenerate
points keep their row and say why in the flags column.
"""
from django.core.management import BaseCommand, CommandError

from rfiqkd.core import RfiError
from rfiqkd.management.commands import RfiQkdHelper, evaluate_job
from rfiqkd.runconfig import RunConfig


class Command(BaseCommand):
    """
    Sweep distance (and optionally the block length) and print one CSV row per point
    """

    help = 'Sweep the key rate over distance and print CSV'

    COLUMNS = ['distance_km', 'n_total', 'key_rate', 'c44_lower', 'e_zz', 's1_lower', 'flags']

    def add_arguments(self, parser):
        RfiQkdHelper.add_run_arguments(parser)
        parser.add_argument('--distance-min', dest='distance_min', type=float, default=None)
        parser.add_argument('--distance-max', dest='distance_max', type=float, default=None)
        parser.add_argument('--distance-step', dest='distance_step', type=float, default=None)
        parser.add_argument('--n-values', dest='n_values', default=None,
                            help='Comma-separated block lengths, e.g. 1e11,1e12,1e13')

    def handle(self, *args, **options):
        self.verbosity = int(options['verbosity'])
        RfiQkdHelper.configure_logging(self.verbosity)
        if options['show_defaults']:
            RfiQkdHelper.show_defaults(self.stdout)
            return

        run = RfiQkdHelper.run_config(options)
        scan = {}
        for option, key in (('distance_min', 'distance_min_km'), ('distance_max', 'distance_max_km'),
                            ('distance_step', 'distance_step_km')):
            if options[option] is not None:
                scan[key] = options[option]
        if options['n_values']:
            try:
                scan['n_values'] = [float(v) for v in options['n_values'].split(',') if v.strip()]
            except ValueError:
                raise CommandError('--n-values must be a comma-separated list of numbers')
        try:
            if scan:
                run = RunConfig.from_mapping(scan, base=run).validate()
        except RfiError as e:
            raise CommandError(str(e))

        n_values = list(run.n_values) or [run.n_total]
        distances = run.distances()
        jobs = []
        for n in n_values:
            point_run = RunConfig.from_mapping({'n_total': n}, base=run)
            jobs.extend((point_run, d) for d in distances)

        try:
            reports = RfiQkdHelper.map_ordered(evaluate_job, jobs, RfiQkdHelper.workers(options))
        except RfiError as e:
            raise CommandError(str(e))

        writer = RfiQkdHelper.csv_writer(self.stdout)
        writer.writerow(self.COLUMNS)
        fmt = RfiQkdHelper.format_float
        for (point_run, distance), report in zip(jobs, reports):
            writer.writerow([fmt(distance), point_run.n_total, fmt(report.key_rate), fmt(report.c44_lower),
                             fmt(report.e_zz), fmt(report.s1_zz_lower), RfiQkdHelper.flags_cell(report.flags)])

        if self.verbosity >= 1:
            positive = sum(1 for r in reports if r.key_length > 0)
            self.stderr.write('%d point(s), %d with a positive key' % (len(reports), positive))
