"""
Management command for the Brownian sheet rate experiment
"""
from dataclasses import asdict

from experiments.serializers import SheetRateSerializer
from simulation.rates import RATE_COLUMNS, REPLICA_COLUMNS, sheet_rate_experiment

from ._experiment import ExperimentCommand, comma_list


class Command(ExperimentCommand):
    """
    Tail probabilities of the sheet sup-error against alpha * n**-beta, error
    decompositions and log-log rate fits
    """
    help = 'Sheet sup-error tails, decompositions and rate fits versus n'
    subcommand = 'sheet-rate'
    serializer_class = SheetRateSerializer

    def add_experiment_arguments(self, parser):
        parser.add_argument('--lambda', dest='lam', type=float, default=None, help='Strip exponent, in (0, 1/5)')
        parser.add_argument('--beta', type=float, default=None, help='Rate exponent, below lambda/2')
        parser.add_argument('--alpha', type=float, default=None,
                            help='Threshold constant (default: twice the smallest-n median sup error)')
        parser.add_argument('--n', type=comma_list, default=None, help='Comma-separated ascending n values')
        parser.add_argument('--replicas', type=int, default=None, help='Replicas per n')
        parser.add_argument('--m', type=int, default=None, help='Sub-strips per strip')
        parser.add_argument('--t-grid', type=int, default=None, help='Points of the uniform t grid')

    def run_experiment(self, config, executor, writer):
        result = sheet_rate_experiment(config['experiment'], mapper=executor)
        writer.write_csv('results.csv', RATE_COLUMNS, [row.csv_row() for row in result.rows])
        writer.write_csv('replicas.csv', REPLICA_COLUMNS, result.replica_rows())
        return {
            'alpha': result.alpha,
            'median_fit': asdict(result.median_fit) if result.median_fit else None,
            'q90_fit': asdict(result.q90_fit) if result.q90_fit else None,
            'p2_union_bound': {str(row.n): row.p2_union_bound for row in result.rows},
            'rows': [asdict(row) for row in result.rows],
        }
