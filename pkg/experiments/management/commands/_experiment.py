"""
Shared plumbing of the experiment management commands
"""
import json
import logging
from datetime import datetime, timezone

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from experiments.services import ReplicaExecutor, ResultWriter, load_config_file, to_builtin
from simulation.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# Validated keys derived from the options; never part of a manifest
DERIVED_KEYS = ('experiment', 'sheet', 'threads')

VERBOSITY_LEVELS = {0: logging.WARNING, 2: logging.DEBUG, 3: logging.DEBUG}


def comma_list(value):
    return [item.strip() for item in value.split(',') if item.strip()]


def format_errors(errors):
    if isinstance(errors, dict):
        parts = []
        for field, messages in errors.items():
            text = format_errors(messages)
            parts.append(text if field == 'non_field_errors' else f"{field}: {text}")
        return '; '.join(parts)
    if isinstance(errors, list):
        return '; '.join(format_errors(item) for item in errors)
    return str(errors)


class ExperimentCommand(BaseCommand):
    """
    Base class of every experiment subcommand.

    Option values come from --config, then the command line; what is still
    missing falls back to settings.SHEETWALK through the serializer defaults.
    Subclasses declare the serializer, add their options and implement
    run_experiment, which writes its files through the given ResultWriter and
    returns the summary.
    """
    subcommand = None
    serializer_class = None
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=None, help='Master seed (unsigned 64-bit)')
        parser.add_argument('--out', type=str, default=None, help='Output directory (default: settings)')
        parser.add_argument('--threads', type=str, default=None, help="Worker threads, an integer or 'auto'")
        parser.add_argument('--config', type=str, default=None, help='YAML or JSON file with option values')
        self.add_experiment_arguments(parser)

    def add_experiment_arguments(self, parser):
        pass

    def option_names(self):
        return list(self.serializer_class().fields)

    def collect_data(self, options):
        data = load_config_file(options['config']) if options.get('config') else {}
        for name in self.option_names():
            if options.get(name) is not None:
                data[name] = options[name]
        return data

    def handle(self, *args, **options):
        level = VERBOSITY_LEVELS.get(options.get('verbosity', 1))
        if level is not None:
            for name in ('simulation', 'experiments'):
                logging.getLogger(name).setLevel(level)

        try:
            data = self.collect_data(options)
        except ConfigurationError as e:
            raise CommandError(str(e), returncode=2)

        serializer = self.serializer_class(data=data)
        if not serializer.is_valid():
            raise CommandError(f"invalid {self.subcommand} configuration: {format_errors(serializer.errors)}",
                               returncode=2)
        config = serializer.validated_data

        started_at = datetime.now(timezone.utc)
        out_dir = options.get('out') or settings.SHEETWALK['OUTPUT_DIR']
        try:
            executor = ReplicaExecutor(threads=config['threads'])
            writer = ResultWriter(out_dir, self.subcommand, started_at)
            self.stdout.write(f"Running {self.subcommand} with seed {config['seed']}")
            summary = self.run_experiment(config, executor, writer)
        except ConfigurationError as e:
            raise CommandError(str(e), returncode=2)
        except Exception as e:
            logger.error(f"{self.subcommand} failed: {e}")
            raise

        writer.write_json('summary.json', summary)
        manifest_config = {key: value for key, value in config.items() if key not in DERIVED_KEYS}
        writer.write_manifest(self.subcommand, manifest_config, config['seed'], started_at, datetime.now(timezone.utc))

        self.stdout.write(json.dumps(to_builtin(summary), indent=2, sort_keys=True))
        self.stdout.write(self.style.SUCCESS(f"{self.subcommand} results written to {writer.directory}"))
        return None

    def run_experiment(self, config, executor, writer):
        raise NotImplementedError
