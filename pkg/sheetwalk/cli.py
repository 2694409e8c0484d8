"""
Console entry point: sheetwalk <subcommand> [options]
"""
import logging
import os
import sys

USAGE = """usage: sheetwalk <subcommand> [options]

subcommands:
  bm-rate     sup-distance quantiles of the transport / Brownian motion coupling
  sheet-rate  sheet sup-error tails, decompositions and rate fits
  covariance  empirical covariance of W_n against the Brownian sheet
  orlicz      Orlicz psi-norm of exp(B(1,1))
  maximal     maximal inequality ratios and mean-identity checks for exp(B)
  rerun       reproduce a run from its manifest.json

sheetwalk <subcommand> --help lists the options of a subcommand.
"""

SUBCOMMANDS = {
    'bm-rate': 'bm_rate',
    'sheet-rate': 'sheet_rate',
    'covariance': 'covariance',
    'orlicz': 'orlicz',
    'maximal': 'maximal',
    'rerun': 'rerun',
}

logger = logging.getLogger('experiments')


def run(argv=None) -> int:
    """Dispatch argv to its management command; returns the exit code"""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv and argv[0] not in ('-h', '--help'):
            sys.stderr.write(f"sheetwalk: unknown subcommand '{argv[0]}'\n")
        sys.stderr.write(USAGE)
        return 0 if argv and argv[0] in ('-h', '--help') else 2

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'sheetwalk.settings')
    import django
    from django.core.management import load_command_class

    django.setup()
    command = load_command_class('experiments', SUBCOMMANDS[argv[0]])
    try:
        command.run_from_argv(['sheetwalk', argv[0]] + argv[1:])
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    except Exception as e:
        logger.error(f"sheetwalk {argv[0]} failed: {e}")
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
