"""
Celery tasks for experiment replicas
"""
from celery import shared_task
from django.utils.module_loading import import_string
import logging

logger = logging.getLogger(__name__)


@shared_task
def run_replica(dotted_name, args):
    """
    Run one replica function by dotted path; arguments and result are plain
    JSON values
    """
    try:
        function = import_string(dotted_name)
        return function(*args)
    except Exception as e:
        logger.error(f"Replica {dotted_name}{tuple(args)} failed: {e}")
        raise
