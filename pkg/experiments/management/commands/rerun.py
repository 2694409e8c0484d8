"""
Management command re-running an experiment from its manifest
"""
from django.core.management import call_command
from django.core.management.base import BaseCommand, CommandError

from experiments.services import load_manifest
from simulation.exceptions import ConfigurationError


class Command(BaseCommand):
    help = 'Reproduce a run from its manifest.json'
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('manifest', type=str, help='Path to a manifest.json written by an earlier run')
        parser.add_argument('--out', type=str, default=None, help='Output directory (default: settings)')
        parser.add_argument('--threads', type=str, default=None, help="Worker threads, an integer or 'auto'")

    def handle(self, *args, **options):
        try:
            manifest = load_manifest(options['manifest'])
        except ConfigurationError as e:
            raise CommandError(str(e), returncode=2)

        config = dict(manifest['config'])
        config['seed'] = manifest['master_seed']
        if options['threads'] is not None:
            config['threads'] = options['threads']
        if options['out'] is not None:
            config['out'] = options['out']

        self.stdout.write(f"Re-running {manifest['subcommand']} from {options['manifest']}")
        call_command(manifest['subcommand'].replace('-', '_'), stdout=self.stdout, stderr=self.stderr,
                     **config)
