"""
Command to compare the 4-state protocol with the 6-4 and 6-6 state RFI protocols.

    manage.py compare --n-total=1e13 --distance-min=0 --distance-max=200 --distance-step=10 -v0

All protocols see the same channel, decoy intensities and finite-key accounting, on the
analytic expected statistics. In the baselines Alice sends X0/X1/Y0/Y1 with (1 - p_Z)/4
each; the 6-6 receiver picks Z/X/Y with 0.5/0.25/0.25.

Columns: distance_km, protocol, key_rate, c_lower, i_e, e_zz, s1_lower, flags. Rows are
ordered by distance, then protocol.
"""
from django.core.management import BaseCommand, CommandError

from rfiqkd.baselines import BaselineProtocol, baseline_key_rate
from rfiqkd.core import RfiError
from rfiqkd.management.commands import RfiQkdHelper
from rfiqkd.runconfig import RunConfig


class Command(BaseCommand):
    """
    Print per-distance key rates of the 4-state, 6-4 and 6-6 protocols as CSV
    """

    help = 'Compare the 4-state protocol with the 6-4 and 6-6 state protocols'

    COLUMNS = ['distance_km', 'protocol', 'key_rate', 'c_lower', 'i_e', 'e_zz', 's1_lower', 'flags']

    def add_arguments(self, parser):
        RfiQkdHelper.add_run_arguments(parser, simulation=False)
        parser.add_argument('--distance-min', dest='distance_min', type=float, default=None)
        parser.add_argument('--distance-max', dest='distance_max', type=float, default=None)
        parser.add_argument('--distance-step', dest='distance_step', type=float, default=None)

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
        try:
            if scan:
                run = RunConfig.from_mapping(scan, base=run).validate()
        except RfiError as e:
            raise CommandError(str(e))

        jobs = [(run, protocol.value, d) for d in run.distances() for protocol in BaselineProtocol]
        try:
            reports = RfiQkdHelper.map_ordered(compare_job, jobs, RfiQkdHelper.workers(options))
        except RfiError as e:
            raise CommandError(str(e))

        writer = RfiQkdHelper.csv_writer(self.stdout)
        writer.writerow(self.COLUMNS)
        fmt = RfiQkdHelper.format_float
        for (_, protocol, distance), report in zip(jobs, reports):
            writer.writerow([fmt(distance), protocol, fmt(report.key_rate), fmt(report.c44_lower),
                             fmt(report.i_e), fmt(report.e_zz), fmt(report.s1_zz_lower),
                             RfiQkdHelper.flags_cell(report.flags)])

        if self.verbosity >= 1:
            self.stderr.write('%d distance(s) x %d protocols' % (len(jobs) // len(BaselineProtocol),
                                                                len(BaselineProtocol)))


def compare_job(job):
    run, protocol, distance = job
    return baseline_key_rate(protocol, run.protocol_config(), run.channel_params(), run.security_params(),
                             distance, run.analysis_options())
