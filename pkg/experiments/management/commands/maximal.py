"""
Management command for the maximal inequality experiment on exp(B)
"""
from dataclasses import asdict

from django.conf import settings

from experiments.serializers import MaximalSerializer
from simulation.maximal import (
    MEAN_CHECK_RECTANGLES,
    exp_sheet_mean_check,
    maximal_ratio_experiment,
    orlicz_norm_exp_gaussian,
)
from simulation.rng import StreamPurpose, derive_stream

from ._experiment import ExperimentCommand, comma_list

COLUMNS = ['beta', 'tail', 'stderr', 'ratio']


class Command(ExperimentCommand):
    """
    Empirical P(max exp(B) > beta) normalized by the Orlicz norm, plus the
    mean identity E exp(B(s,t) - B(s',t')) on preset rectangles
    """
    help = 'Maximal inequality ratios for exp(B) and mean-identity checks'
    subcommand = 'maximal'
    serializer_class = MaximalSerializer

    def add_experiment_arguments(self, parser):
        parser.add_argument('--betas', type=comma_list, default=None, help='Comma-separated tail levels')
        parser.add_argument('--replicas', type=int, default=None, help='Sheets for the tail estimates')
        parser.add_argument('--grid-size', type=int, default=None, help='Cells per side of the sheet grid')
        parser.add_argument('--mean-replicas', type=int, default=None, help='Replicas per mean-identity rectangle')
        parser.add_argument('--tol', type=float, default=None, help='Orlicz root tolerance')

    def run_experiment(self, config, executor, writer):
        norm = orlicz_norm_exp_gaussian(config['tol'])
        stream = derive_stream(config['seed'], [StreamPurpose.SHEET])
        result = maximal_ratio_experiment(config['betas'], config['replicas'], config['grid_size'],
                                          stream.derive(0), mu_star=norm.mu_star, mapper=executor)
        writer.write_csv('results.csv', COLUMNS, [[row.beta, row.tail, row.stderr, row.ratio] for row in result.rows])

        checks = []
        for index, (upper, lower) in enumerate(MEAN_CHECK_RECTANGLES):
            check = exp_sheet_mean_check(upper, lower, config['mean_replicas'], stream.derive(1, index),
                                         chunk=settings.SHEETWALK['MEAN_CHECK_CHUNK'])
            checks.append(dict(asdict(check), z=check.z_score))
        return {
            'mu_star': norm.mu_star,
            'residual': norm.residual,
            'ratios': [asdict(row) for row in result.rows],
            'max_ratio': result.max_ratio,
            'max_mean': result.max_mean,
            'max_mean_stderr': result.max_mean_stderr,
            'mean_checks': checks,
        }
