"""
Management command for the Orlicz norm of exp(B(1, 1))
"""
from dataclasses import asdict

import numpy as np

from experiments.serializers import OrliczSerializer
from simulation.maximal import (
    expected_psi_closed_form,
    expected_psi_displayed_form,
    expected_psi_exp_gaussian,
    gaussian_tail_closed_form,
    gaussian_tail_displayed_form,
    gaussian_tail_integral,
    orlicz_monte_carlo,
    orlicz_norm_exp_gaussian,
)
from simulation.rng import derive_stream

from ._experiment import ExperimentCommand

COLUMNS = ['mu', 'quadrature', 'closed_form', 'displayed_form']
TAIL_POINTS = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]


class Command(ExperimentCommand):
    """
    Root of E psi(exp(Z) / mu) = 1 with the mu -> E psi table and the
    Gaussian tail integral against its closed forms
    """
    help = 'Orlicz psi-norm of exp(B(1,1)), psi(t) = t log+ t'
    subcommand = 'orlicz'
    serializer_class = OrliczSerializer

    def add_experiment_arguments(self, parser):
        parser.add_argument('--tol', type=float, default=None, help='Root residual tolerance')
        parser.add_argument('--mc-samples', type=int, default=None,
                            help='Monte Carlo samples per mu for the quadrature cross-check (0 skips it)')

    def run_experiment(self, config, executor, writer):
        result = orlicz_norm_exp_gaussian(config['tol'])
        mus = sorted(set(np.geomspace(0.25, 8.0, 16).tolist()) | {result.mu_star})
        writer.write_csv('results.csv', COLUMNS, [
            [mu, expected_psi_exp_gaussian(mu), expected_psi_closed_form(mu), expected_psi_displayed_form(mu)]
            for mu in mus
        ])

        summary = asdict(result)
        summary['gaussian_tail'] = [
            {'m': m, 'quadrature': gaussian_tail_integral(m), 'closed_form': gaussian_tail_closed_form(m),
             'displayed_form': gaussian_tail_displayed_form(m)}
            for m in TAIL_POINTS
        ]
        if config['mc_samples']:
            stream = derive_stream(config['seed'], [])
            checks = []
            for index, mu in enumerate([0.5, 1.0, result.mu_star, 2.0, 4.0]):
                mean, stderr = orlicz_monte_carlo(mu, config['mc_samples'], stream.derive(index))
                quadrature = expected_psi_exp_gaussian(mu)
                checks.append({'mu': mu, 'monte_carlo': mean, 'stderr': stderr, 'quadrature': quadrature,
                               'z': (mean - quadrature) / stderr if stderr > 0 else 0.0})
            summary['monte_carlo'] = checks
        return summary
