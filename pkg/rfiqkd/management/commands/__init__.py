""" Init for commands """
import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor

from django.conf import settings
from django.core.management import CommandError

from rfiqkd.channel import expected_tallies
from rfiqkd.core import RfiError
from rfiqkd.keyrate import extract_key, group_and_extract
from rfiqkd.montecarlo import DriftKind, drift_beta, sample_drifting_tallies, sample_tallies
from rfiqkd.runconfig import RunConfig


class RfiQkdHelper(object):
    """ Helper class shared by the rfiqkd management commands """

    ## CONSTANTS
    EXIT_ERROR = 1
    EXIT_NO_KEY = 2

    # command-line option -> RunConfig key
    OPTION_KEYS = [
        ('distance', 'distance_km'),
        ('n_total', 'n_total'),
        ('mode', 'mode'),
        ('seed', 'seed'),
        ('groups', 'm_groups'),
        ('drift', 'drift'),
        ('n_slices', 'n_slices'),
        ('beta', 'beta_rad'),
    ]
    # store_true switches -> (RunConfig key, value when set)
    SWITCH_KEYS = [
        ('literal_paper_formulas', 'literal_paper_formulas', True),
        ('asymptotic', 'finite_key', False),
        ('signal_only_n_zz', 'n_zz_all_intensities', False),
        ('rho_negative_exponent', 'rho_negative_exponent', True),
    ]

    ## ARGUMENTS

    @classmethod
    def add_run_arguments(cls, parser, simulation=True):
        """ Options shared by every command that builds a RunConfig """
        parser.add_argument('--config', dest='config', default=None,
                            help='JSON run configuration; command-line options override it')
        parser.add_argument('--distance', dest='distance', type=float, default=None,
                            help='Fiber length in km')
        parser.add_argument('--n-total', dest='n_total', type=float, default=None,
                            help='Pulses sent, e.g. 3e12')
        parser.add_argument('--groups', dest='groups', type=int, default=None,
                            help='Number M of rho groups')
        parser.add_argument('--beta', dest='beta', type=float, default=None,
                            help='Reference-frame angle in rad (start angle of a drift)')
        if simulation:
            parser.add_argument('--mode', dest='mode', choices=['analytic', 'montecarlo'], default=None,
                                help='Expected statistics or Monte Carlo sampling')
            parser.add_argument('--seed', dest='seed', type=int, default=None,
                                help='Monte Carlo seed')
            parser.add_argument('--drift', dest='drift', choices=[k.value for k in DriftKind],
                                default=None, help='Drift model of beta')
            parser.add_argument('--n-slices', dest='n_slices', type=int, default=None,
                                help='Time slices of a drifting run')
        parser.add_argument('--literal-paper-formulas', dest='literal_paper_formulas',
                            action='store_true', default=False,
                            help='Use the printed decoy, C44 and rho forms, typos included')
        parser.add_argument('--asymptotic', dest='asymptotic', action='store_true', default=False,
                            help='Drop fluctuation and finite-key terms')
        parser.add_argument('--signal-only-n-zz', dest='signal_only_n_zz', action='store_true',
                            default=False, help='Count n_ZZ and E_ZZ on the signal intensity only')
        parser.add_argument('--rho-negative-exponent', dest='rho_negative_exponent',
                            action='store_true', default=False,
                            help='Use exp(-eta mu) in the rho classifier')
        parser.add_argument('--show-defaults', dest='show_defaults', action='store_true', default=False,
                            help='Print every configuration default with its source and exit')
        parser.add_argument('--workers', dest='workers', type=int, default=None,
                            help='Worker processes (default: RFIQKD_WORKERS)')

    @classmethod
    def run_config(cls, options):
        """ RunConfig from --config plus command-line overrides, validated """
        try:
            run = RunConfig.load(options['config']) if options.get('config') else RunConfig()
            overrides = {}
            for option, key in cls.OPTION_KEYS:
                if options.get(option) is not None:
                    overrides[key] = options[option]
            for option, key, value in cls.SWITCH_KEYS:
                if options.get(option):
                    overrides[key] = value
            if overrides:
                run = RunConfig.from_mapping(overrides, base=run)
            return run.validate()
        except (RfiError, OSError) as e:
            raise CommandError(str(e))

    @classmethod
    def given_keys(cls, options):
        """ RunConfig keys set by the --config file or by command-line options """
        keys = set()
        if options.get('config'):
            keys.update(RunConfig.read_mapping(options['config']))
        keys.update(key for option, key in cls.OPTION_KEYS if options.get(option) is not None)
        return keys

    @classmethod
    def workers(cls, options):
        return options.get('workers') or getattr(settings, 'RFIQKD_WORKERS', 1)

    @classmethod
    def configure_logging(cls, verbosity):
        if verbosity >= 3:
            logger = logging.getLogger('rfiqkd')
            logger.setLevel(logging.DEBUG)
            for handler in logger.handlers:
                handler.setLevel(logging.DEBUG)

    ## PIPELINE

    @classmethod
    def is_sliced(cls, run):
        return run.drift != DriftKind.FIXED.value or run.m_groups > 1

    @classmethod
    def sample(cls, run, distance_km, workers=1):
        """
        Tallies of one run: a single ObservedTallies/OracleTallies, or a list of per-slice
        tallies for drifting or grouped runs.
        """
        cfg, ch = run.protocol_config(), run.channel_params()
        if not cls.is_sliced(run):
            if run.mode == 'analytic':
                return expected_tallies(cfg, ch, distance_km)
            return sample_tallies(cfg, ch, distance_km, run.seed)
        trace = drift_beta(run.drift_model(), run.n_slices, run.n_total // run.n_slices,
                           run.slice_duration_s, seed=run.seed)
        if run.mode == 'analytic':
            slice_cfg = cfg.with_total(trace.pulses_per_slice)
            return [expected_tallies(slice_cfg, ch.with_beta(beta), distance_km) for _, beta in trace]
        return sample_drifting_tallies(cfg.with_total(trace.n_total), ch, distance_km, trace,
                                       run.seed, workers=workers)

    @classmethod
    def analyse(cls, run, data, distance_km, workers=1):
        """ KeyRateReport for the output of sample() or of a tally file """
        cfg, ch, sec = run.protocol_config(), run.channel_params(), run.security_params()
        options = run.analysis_options()
        if isinstance(data, list):
            return group_and_extract(data, run.m_groups, cfg, ch, sec, distance_km, options, workers=workers)
        return extract_key(data, cfg, sec, options)

    @classmethod
    def evaluate(cls, run, distance_km, workers=1):
        data = cls.sample(run, distance_km, workers)
        return cls.analyse(run, data, distance_km, workers), data

    @classmethod
    def map_ordered(cls, func, items, workers):
        """ func over items, results in input order, in a process pool when workers > 1 """
        items = list(items)
        if workers > 1 and len(items) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(func, items))
        return [func(item) for item in items]

    ## OUTPUT

    @classmethod
    def format_float(cls, value):
        value = float(value)
        if not math.isfinite(value):
            value = 0.0
        return getattr(settings, 'RFIQKD_CSV_FLOAT_FORMAT', '%.6e') % value

    @classmethod
    def csv_writer(cls, stream):
        return csv.writer(stream, lineterminator='\n')

    @classmethod
    def flags_cell(cls, flags):
        return ';'.join(flags)

    @classmethod
    def write_report(cls, stream, report, verbosity=1, indent=''):
        """ Prints a KeyRateReport, one `name = value` per line """
        for name, value in report.as_rows():
            if isinstance(value, float):
                value = cls.format_float(value)
            stream.write('%s%-22s = %s' % (indent, name, value))
        if verbosity >= 1:
            for flag in report.flags:
                stream.write('%sflag: %s' % (indent, flag))
        if verbosity >= 2:
            for i, group in enumerate(report.groups):
                stream.write('%sgroup %d:' % (indent, i))
                cls.write_report(stream, group, verbosity, indent + '    ')

    @classmethod
    def write_json(cls, path, report):
        with open(path, 'w') as fh:
            json.dump(report.as_dict(), fh, indent=2)
            fh.write('\n')

    @classmethod
    def show_defaults(cls, stream):
        for key, default, source, help_text in RunConfig.defaults():
            line = '%-24s %-22r %s' % (key, default, source)
            if help_text:
                line += '  (%s)' % help_text
            stream.write(line)

    @classmethod
    def finish(cls, report):
        """ Raises the "no key" exit status after the report has been printed """
        if report.key_length <= 0:
            raise CommandError('No secret key: %s' % (cls.flags_cell(report.flags) or 'zero length'),
                               returncode=cls.EXIT_NO_KEY)


def evaluate_job(job):
    """ KeyRateReport of one (RunConfig, distance_km) job; module-level so process pools can pickle it """
    run, distance_km = job
    report, _ = RfiQkdHelper.evaluate(run, distance_km)
    return report
