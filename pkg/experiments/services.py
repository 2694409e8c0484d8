"""
Result persistence, run manifests and replica execution for experiments
"""
import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from django.conf import settings

import sheetwalk
from simulation.exceptions import ConfigurationError

from .serializers import RunManifestSerializer

logger = logging.getLogger(__name__)

CELERY_RESULT_TIMEOUT = 3600


def to_builtin(value: Any) -> Any:
    """Convert numpy scalars and arrays, tuples and paths into JSON-ready values"""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Flag values from a YAML (or JSON) file; keys may use dashes or underscores
    """
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = yaml.safe_load(handle) or {}
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigurationError(f"invalid YAML in config file {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a mapping of option names to values")
    aliases = {'lambda': 'lam', 't-grid': 't_grid'}
    return {aliases.get(key, key).replace('-', '_'): value for key, value in data.items()}


class ResultWriter:
    """
    Writes one run's files under <out>/<subcommand>/<UTC timestamp>/.

    CSV files use '.' decimals, LF line endings and a header row; floats are
    written with repr so identical runs give identical bytes.
    """

    def __init__(self, out_dir: Union[str, Path], subcommand: str, started_at: Optional[datetime] = None):
        started_at = started_at or datetime.now(timezone.utc)
        stamp = started_at.strftime('%Y%m%dT%H%M%S%fZ')
        self.directory = Path(out_dir) / subcommand / stamp
        self.directory.mkdir(parents=True, exist_ok=False)
        self.outputs: Dict[str, str] = {}

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        path = self.directory / name
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(item)) if isinstance(item, (float, np.floating)) else item
                                 for item in to_builtin(list(row))])
        self.outputs[name] = str(path)
        return path

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        path = self.directory / name
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            json.dump(to_builtin(data), handle, indent=2, sort_keys=True)
            handle.write('\n')
        self.outputs[name] = str(path)
        return path

    def write_manifest(self, subcommand: str, config: Dict[str, Any], master_seed: int,
                       started_at: datetime, finished_at: datetime) -> Path:
        outputs = dict(self.outputs, **{'manifest.json': str(self.directory / 'manifest.json')})
        manifest = RunManifestSerializer(data={
            'subcommand': subcommand,
            'config': to_builtin(config),
            'master_seed': master_seed,
            'version': sheetwalk.__version__,
            'started_at': started_at.isoformat(),
            'finished_at': finished_at.isoformat(),
            'outputs': outputs,
        })
        manifest.is_valid(raise_exception=True)
        return self.write_json('manifest.json', dict(manifest.data))


def load_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read manifest {path}: {e}")
    serializer = RunManifestSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigurationError(f"invalid manifest {path}: {serializer.errors}")
    return serializer.validated_data


def resolve_threads(threads: Union[int, str, None]) -> int:
    if threads in (None, 'auto'):
        return os.cpu_count() or 1
    return max(int(threads), 1)


class ReplicaExecutor:
    """
    Maps a module-level replica function over argument tuples, preserving
    argument order.

    backend 'local' uses a thread pool; 'celery' sends each call to a worker
    through experiments.tasks.run_replica and falls back to local execution
    when dispatch fails. Errors raised inside a task reach the caller.
    """

    def __init__(self, threads: Union[int, str, None] = None, backend: Optional[str] = None):
        self.threads = resolve_threads(threads if threads is not None else settings.SHEETWALK['THREADS'])
        self.backend = backend or settings.SHEETWALK['EXECUTOR']
        if self.backend not in ('local', 'celery'):
            raise ConfigurationError(f"unknown executor backend '{self.backend}', expected 'local' or 'celery'")

    def __call__(self, function: Callable[..., Any], arguments: Sequence[Tuple[Any, ...]]) -> List[Any]:
        arguments = list(arguments)
        if self.backend == 'celery':
            try:
                pending = self._dispatch_celery(function, arguments)
            except Exception as e:
                logger.warning(f"Celery not available, running locally: {e}")
            else:
                return [result.get(timeout=CELERY_RESULT_TIMEOUT) for result in pending]
        return self._run_local(function, arguments)

    def _run_local(self, function, arguments):
        if self.threads == 1 or len(arguments) <= 1:
            return [function(*args) for args in arguments]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(lambda args: function(*args), arguments))

    def _dispatch_celery(self, function, arguments):
        from .tasks import run_replica

        dotted_name = f"{function.__module__}.{function.__qualname__}"
        pending = [run_replica.delay(dotted_name, to_builtin(list(args))) for args in arguments]
        logger.info(f"dispatched {len(pending)} replicas of {dotted_name} to Celery")
        return pending
