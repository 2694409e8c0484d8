"""
Tests for result writing, config files and replica execution
"""
import json
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from experiments.services import ReplicaExecutor, ResultWriter, load_config_file, load_manifest, to_builtin
from simulation.exceptions import ConfigurationError


def square_plus(x, offset):
    return x * x + offset


class ResultWriterTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.started = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)

    def test_layout_and_csv_format(self):
        writer = ResultWriter(self.tmp.name, 'bm-rate', self.started)
        self.assertEqual(writer.directory, Path(self.tmp.name) / 'bm-rate' / '20260301T120000000000Z')
        path = writer.write_csv('results.csv', ['n', 'value'], [[1024, 0.1], [2048, np.float64(1 / 3)]])
        self.assertEqual(path.read_bytes(), b'n,value\n1024,0.1\n2048,0.3333333333333333\n')

    def test_json_is_sorted_and_builtin(self):
        writer = ResultWriter(self.tmp.name, 'orlicz', self.started)
        path = writer.write_json('summary.json', {'b': np.float64(2.5), 'a': np.arange(2)})
        self.assertEqual(path.read_text(), '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 2.5\n}\n')

    def test_manifest_round_trip(self):
        writer = ResultWriter(self.tmp.name, 'orlicz', self.started)
        writer.write_csv('results.csv', ['mu'], [[1.0]])
        path = writer.write_manifest('orlicz', {'tol': 1e-6, 'mc_samples': 0}, 42, self.started, self.started)
        manifest = load_manifest(path)
        self.assertEqual(manifest['subcommand'], 'orlicz')
        self.assertEqual(manifest['master_seed'], 42)
        self.assertEqual(manifest['config']['tol'], 1e-6)
        self.assertIn('results.csv', manifest['outputs'])

    def test_bad_manifest_rejected(self):
        path = Path(self.tmp.name) / 'manifest.json'
        path.write_text(json.dumps({'subcommand': 'orlicz'}))
        with self.assertRaises(ConfigurationError):
            load_manifest(path)


class ConfigFileTests(SimpleTestCase):
    def test_yaml_keys_normalized(self):
        with tempfile.NamedTemporaryFile('w', suffix='.yml', delete=False) as handle:
            handle.write('lambda: 0.15\nt-grid: 64\nreplicas: 12\nn: [1024, 4096]\n')
        self.addCleanup(Path(handle.name).unlink)
        self.assertEqual(load_config_file(handle.name), {'lam': 0.15, 't_grid': 64, 'replicas': 12, 'n': [1024, 4096]})

    def test_non_mapping_rejected(self):
        with tempfile.NamedTemporaryFile('w', suffix='.yml', delete=False) as handle:
            handle.write('- 1\n- 2\n')
        self.addCleanup(Path(handle.name).unlink)
        with self.assertRaises(ConfigurationError):
            load_config_file(handle.name)

    def test_missing_file_rejected(self):
        with self.assertRaises(ConfigurationError):
            load_config_file('/nonexistent/sheetwalk.yml')


class ReplicaExecutorTests(SimpleTestCase):
    def test_thread_pool_preserves_order(self):
        arguments = [(x, 1) for x in range(50)]
        self.assertEqual(ReplicaExecutor(threads=4, backend='local')(square_plus, arguments),
                         [x * x + 1 for x in range(50)])
        self.assertEqual(ReplicaExecutor(threads=1, backend='local')(square_plus, arguments),
                         [x * x + 1 for x in range(50)])

    def test_unknown_backend_rejected(self):
        with self.assertRaises(ConfigurationError):
            ReplicaExecutor(threads=1, backend='mpi')

    def test_celery_falls_back_to_local(self):
        with mock.patch.object(ReplicaExecutor, '_dispatch_celery', side_effect=ConnectionError('no broker')):
            with self.assertLogs('experiments.services', level='WARNING'):
                results = ReplicaExecutor(threads=2, backend='celery')(square_plus, [(2, 0), (3, 1)])
        self.assertEqual(results, [4, 10])

    def test_task_errors_propagate(self):
        failed = mock.Mock()
        failed.get.side_effect = ValueError('replica failed')
        with mock.patch.object(ReplicaExecutor, '_dispatch_celery', return_value=[failed, failed]):
            with self.assertRaises(ValueError):
                ReplicaExecutor(threads=2, backend='celery')(square_plus, [(2, 0), (3, 1)])

    def test_celery_results_are_collected_in_order(self):
        done = [mock.Mock(**{'get.return_value': value}) for value in (4, 10)]
        with mock.patch.object(ReplicaExecutor, '_dispatch_celery', return_value=done):
            results = ReplicaExecutor(threads=2, backend='celery')(square_plus, [(2, 0), (3, 1)])
        self.assertEqual(results, [4, 10])
        done[0].get.assert_called_once()

    def test_to_builtin(self):
        self.assertEqual(to_builtin({'a': (np.int64(1), np.float64(0.5)), 2: Path('/x')}),
                         {'a': [1, 0.5], '2': '/x'})
