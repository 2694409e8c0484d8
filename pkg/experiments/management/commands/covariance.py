"""
Management command for the covariance check of the sheet approximation
"""
import json

from experiments.serializers import CovarianceSerializer
from simulation.rng import derive_stream
from simulation.sheet import covariance_check

from ._experiment import ExperimentCommand

COLUMNS = ['s1', 't1', 's2', 't2', 'empirical', 'exact', 'interpolated', 'stderr', 'z']


class Command(ExperimentCommand):
    help = 'Empirical covariance of W_n at preset point pairs against (s1^s2)(t1^t2)'
    subcommand = 'covariance'
    serializer_class = CovarianceSerializer

    def add_experiment_arguments(self, parser):
        parser.add_argument('--n', type=int, default=None, help='Transport scale')
        parser.add_argument('--lambda', dest='lam', type=float, default=None, help='Strip exponent, in (0, 1/5)')
        parser.add_argument('--m', type=int, default=None, help='Sub-strips per strip')
        parser.add_argument('--replicas', type=int, default=None, help='Replicas')
        parser.add_argument('--pairs', type=json.loads, default=None,
                            help='JSON list of point pairs [[[s1, t1], [s2, t2]], ...]')

    def run_experiment(self, config, executor, writer):
        sheet = config['sheet']
        pairs = [(tuple(first), tuple(second)) for first, second in config['pairs']]
        rows = covariance_check(sheet, config['replicas'], pairs, derive_stream(config['seed'], [sheet.n]),
                                mapper=executor)
        writer.write_csv('results.csv', COLUMNS, [
            [row.first[0], row.first[1], row.second[0], row.second[1], row.empirical, row.exact,
             row.interpolated, row.stderr, row.z_score]
            for row in rows
        ])
        return {
            'n': sheet.n,
            'strips': sheet.strips,
            'max_abs_z': max(abs(row.z_score) for row in rows),
        }
