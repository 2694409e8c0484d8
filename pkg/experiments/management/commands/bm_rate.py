"""
Management command for the Brownian-motion coupling rate experiment
"""
from dataclasses import asdict

from experiments.serializers import BmRateSerializer
from simulation.coupling import bm_rate_experiment
from simulation.rates import fit_rate

from ._experiment import ExperimentCommand, comma_list

COLUMNS = ['n', 'replicas', 'median', 'q90', 'q99', 'seed']


class Command(ExperimentCommand):
    """
    Quantiles of the sup-distance between a transport path and its coupled
    Brownian motion, for each n
    """
    help = 'Sup-distance quantiles of the transport / Brownian motion coupling versus n'
    subcommand = 'bm-rate'
    serializer_class = BmRateSerializer

    def add_experiment_arguments(self, parser):
        parser.add_argument('--n', type=comma_list, default=None, help='Comma-separated ascending n values')
        parser.add_argument('--replicas', type=int, default=None, help='Replicas per n')
        parser.add_argument('--grid-size', type=int, default=None, help='Points of the uniform t grid')
        parser.add_argument('--refine', type=int, default=None,
                            help='Refine every grid cell by this factor, sharing the base Brownian values')

    def run_experiment(self, config, executor, writer):
        rows = bm_rate_experiment(config['n'], config['replicas'], config['seed'],
                                  grid_size=config['grid_size'], refine=config['refine'], mapper=executor)
        writer.write_csv('results.csv', COLUMNS, [[getattr(row, column) for column in COLUMNS] for row in rows])

        summary = {'rows': [asdict(row) for row in rows]}
        if len(rows) >= 3:
            summary['median_fit'] = asdict(fit_rate([(row.n, row.median) for row in rows]))
            summary['q90_fit'] = asdict(fit_rate([(row.n, row.q90) for row in rows]))
        return summary
