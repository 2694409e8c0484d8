"""
Serializers validating experiment configurations and run manifests
"""
from django.conf import settings
from rest_framework import serializers

from simulation.exceptions import ConfigurationError
from simulation.rates import RateExperimentConfig
from simulation.sheet import DEFAULT_COVARIANCE_PAIRS, SheetConfig

MAX_SEED = 2 ** 64 - 1

SUBCOMMANDS = ['bm-rate', 'sheet-rate', 'covariance', 'orlicz', 'maximal']


def _default(key):
    return lambda: settings.SHEETWALK[key]


class CommaListField(serializers.ListField):
    """
    List field that also accepts a comma-separated string, as given on the
    command line
    """

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item.strip() for item in data.split(',') if item.strip()]
        return super().to_internal_value(data)


class ThreadsField(serializers.CharField):
    def to_internal_value(self, data):
        value = str(data).strip().lower()
        if value == 'auto':
            return value
        if not value.isdigit() or int(value) < 1:
            raise serializers.ValidationError("threads must be a positive integer or 'auto'")
        return int(value)


class ExperimentSerializer(serializers.Serializer):
    """
    Options shared by every subcommand
    """
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, default=_default('SEED'))
    threads = ThreadsField(default=_default('THREADS'))


def _ascending(value, name='n'):
    if any(later <= earlier for earlier, later in zip(value, value[1:])):
        raise serializers.ValidationError(f"{name} list must be strictly ascending")
    return value


class BmRateSerializer(ExperimentSerializer):
    n = CommaListField(child=serializers.IntegerField(min_value=1), min_length=1, default=_default('BM_N_LIST'))
    replicas = serializers.IntegerField(min_value=1, default=_default('REPLICAS'))
    grid_size = serializers.IntegerField(min_value=2, default=_default('COUPLING_GRID_SIZE'))
    refine = serializers.IntegerField(min_value=1, default=1)

    def validate_n(self, value):
        return _ascending(value)


class SheetRateSerializer(ExperimentSerializer):
    lam = serializers.FloatField(default=_default('LAMBDA'))
    beta = serializers.FloatField(default=_default('BETA'))
    alpha = serializers.FloatField(required=False, allow_null=True, default=None)
    n = CommaListField(child=serializers.IntegerField(min_value=1), min_length=1, default=_default('SHEET_N_LIST'))
    replicas = serializers.IntegerField(min_value=1, default=_default('REPLICAS'))
    m = serializers.IntegerField(min_value=1, default=_default('SUBSTRIPS'))
    t_grid = serializers.IntegerField(min_value=2, default=_default('T_GRID_SIZE'))

    def validate_n(self, value):
        return _ascending(value)

    def validate(self, attrs):
        """
        Build the rate configuration once so the lambda / beta constraints are
        reported with their own wording
        """
        try:
            attrs['experiment'] = RateExperimentConfig(
                lam=attrs['lam'], beta=attrs['beta'], alpha=attrs.get('alpha'), n_list=tuple(attrs['n']),
                replicas=attrs['replicas'], master_seed=attrs['seed'], m=attrs['m'], t_grid_size=attrs['t_grid'],
            )
        except ConfigurationError as e:
            raise serializers.ValidationError(str(e))
        return attrs


class PointPairField(serializers.ListField):
    child = serializers.ListField(child=serializers.ListField(child=serializers.FloatField(min_value=0.0, max_value=1.0),
                                                             min_length=2, max_length=2),
                                  min_length=2, max_length=2)


class CovarianceSerializer(ExperimentSerializer):
    n = serializers.IntegerField(min_value=1, default=_default('COVARIANCE_N'))
    lam = serializers.FloatField(default=_default('LAMBDA'))
    m = serializers.IntegerField(min_value=1, default=_default('SUBSTRIPS'))
    replicas = serializers.IntegerField(min_value=2, default=2000)
    pairs = PointPairField(min_length=1, default=lambda: [[list(a), list(b)] for a, b in DEFAULT_COVARIANCE_PAIRS])

    def validate(self, attrs):
        try:
            attrs['sheet'] = SheetConfig(n=attrs['n'], lam=attrs['lam'], m=attrs['m'])
        except ConfigurationError as e:
            raise serializers.ValidationError(str(e))
        return attrs


class OrliczSerializer(ExperimentSerializer):
    tol = serializers.FloatField(min_value=1e-15, max_value=1e-2, default=_default('ORLICZ_TOLERANCE'))
    mc_samples = serializers.IntegerField(min_value=0, default=0)


class MaximalSerializer(ExperimentSerializer):
    betas = CommaListField(child=serializers.FloatField(min_value=1e-12), min_length=1, default=lambda: [2.0, 4.0, 8.0, 16.0])
    replicas = serializers.IntegerField(min_value=2, default=10000)
    grid_size = serializers.IntegerField(min_value=1, default=_default('MAXIMAL_GRID_SIZE'))
    mean_replicas = serializers.IntegerField(min_value=2, default=_default('MEAN_CHECK_REPLICAS'))
    tol = serializers.FloatField(min_value=1e-15, max_value=1e-2, default=_default('ORLICZ_TOLERANCE'))


class RunManifestSerializer(serializers.Serializer):
    """
    Manifest written next to every result set; re-ingesting it reproduces the run
    """
    subcommand = serializers.ChoiceField(choices=SUBCOMMANDS)
    config = serializers.DictField()
    master_seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED)
    version = serializers.CharField()
    started_at = serializers.DateTimeField()
    finished_at = serializers.DateTimeField()
    outputs = serializers.DictField(child=serializers.CharField())
