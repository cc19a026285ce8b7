"""Run-config validation and report rendering with Django REST framework.

Config blocks are plain serializers whose ``create`` builds the domain objects, so a whole
run config is turned into a RunConfig by ``RunConfigSerializer(data=...).save()``.
Reports go the other way: dataclass instances are rendered with nested serializers that
can drop heavy fields (fields, histories) when they appear inside a larger report.
"""

import math
from pathlib import Path

import numpy as np
from django.conf import settings
from rest_framework import fields, serializers
from rest_framework.exceptions import ValidationError

from .analysis import LambdaOptions
from .energy import ModelParams
from .exceptions import MixedSchrodingerError, ModelError
from .fieldio import read_field
from .runconfig import RunConfig
from .solver import SolveOptions
from .spectral import MIN_NODES, make_grid
from .weights import WEIGHT_KINDS, make_weight


class ChoicesDisplay(fields.Field):
    """Closed-list field accepting either the internal value or its display name.

    Represented by the display name.
    """

    def __init__(self, choice_list, **kwargs):
        self.__choice_list = choice_list
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        for internal_value, display_value in self.__choice_list:
            if internal_value == data or display_value == data:
                return internal_value
        raise ValidationError(f'Invalid closed list reference {data}.'
                              f' Possible values {[choice[1] for choice in self.__choice_list]}')

    def to_representation(self, value):
        for internal_value, display_value in self.__choice_list:
            if internal_value == value:
                return display_value
        return value


class ScalarOrListField(serializers.ListField):
    """List field that also takes a single value, as written by ``key = value``."""

    def to_internal_value(self, data):
        if isinstance(data, (str, int, float, bool)):
            data = [data]
        return super().to_internal_value(data)


def with_defaults(defaults, attrs):
    merged = dict(defaults)
    merged.update(attrs)
    return merged


class GridSerializer(serializers.Serializer):
    nx = fields.IntegerField(min_value=MIN_NODES)
    ny = fields.IntegerField(min_value=MIN_NODES)
    lx = fields.FloatField()
    ly = fields.FloatField()

    def validate_nx(self, value):
        if value % 2:
            raise ValidationError('must be even')
        return value

    validate_ny = validate_nx

    def validate_lx(self, value):
        if not (math.isfinite(value) and value > 0.0):
            raise ValidationError('must be a positive length')
        return value

    validate_ly = validate_lx

    def create(self, validated_data):
        return make_grid(**validated_data)


class ModelBlockSerializer(serializers.Serializer):
    s1 = fields.FloatField()
    s2 = fields.FloatField()
    alpha = fields.FloatField()
    beta = fields.FloatField()
    kappa = ScalarOrListField(child=fields.FloatField(min_value=0.0), required=False, default=[0.0])

    def validate_alpha(self, value):
        if value <= 1.0:
            raise ValidationError('exponent rule violated: alpha, beta > 1')
        return value

    validate_beta = validate_alpha

    def validate(self, attrs):
        try:
            for kappa in attrs['kappa']:
                ModelParams(attrs['s1'], attrs['s2'], attrs['alpha'], attrs['beta'], kappa)
        except ModelError as error:
            raise ValidationError(str(error)) from None
        return attrs

    def create(self, validated_data):
        kappas = validated_data.pop('kappa')
        return [ModelParams(kappa=kappa, **validated_data) for kappa in kappas]


class WeightBlockSerializer(serializers.Serializer):
    kind = ChoicesDisplay([(kind, kind) for kind in WEIGHT_KINDS])
    params = fields.DictField(child=fields.FloatField(), required=False, default=dict)
    table = fields.CharField(required=False)

    def validate(self, attrs):
        if attrs['kind'] == 'tabulated' and 'table' not in attrs:
            raise ValidationError({'table': 'tabulated weights need h.table = <MGF1 file>'})
        return attrs

    def create(self, validated_data):
        kind = validated_data['kind']
        params = dict(validated_data.get('params', {}))
        try:
            if kind == 'tabulated':
                path = Path(validated_data['table'])
                if not path.is_absolute():
                    path = self.context.get('base_dir', Path.cwd()) / path
                return make_weight(kind, table=read_field(path), **params)
            return make_weight(kind, **params)
        except (MixedSchrodingerError, OSError) as error:
            raise ValidationError({'params': str(error)}) from None


class SolverBlockSerializer(serializers.Serializer):
    max_iters = fields.IntegerField(min_value=1, required=False)
    grad_tol = fields.FloatField(min_value=0.0, required=False)
    step_rule = ChoicesDisplay([('bb', 'adaptive-bb'), ('fixed', 'fixed')], required=False)
    step_size = fields.FloatField(min_value=0.0, required=False)
    n_starts = fields.IntegerField(min_value=1, required=False)
    radial = fields.BooleanField(required=False)
    symmetrize = fields.BooleanField(required=False)
    threshold_stop = fields.BooleanField(required=False)

    def validate(self, attrs):
        attrs = with_defaults(settings.SOLVER_DEFAULTS, attrs)
        if attrs['grad_tol'] <= 0.0 or attrs['step_size'] <= 0.0:
            raise ValidationError({'grad_tol': 'tolerances and step sizes must be > 0'})
        return attrs

    def create(self, validated_data):
        data = dict(validated_data)
        threshold_stop = data.pop('threshold_stop', True)
        return SolveOptions(**data), threshold_stop


class LambdaBlockSerializer(serializers.Serializer):
    n_starts = fields.IntegerField(min_value=1, required=False)
    corpus_size = fields.IntegerField(min_value=0, required=False)
    max_iters = fields.IntegerField(min_value=1, required=False)
    grad_tol = fields.FloatField(required=False)
    strict = fields.BooleanField(required=False)
    radial = ScalarOrListField(child=fields.BooleanField(), required=False, default=[False])

    def validate(self, attrs):
        return with_defaults(settings.LAMBDA_DEFAULTS, attrs)

    def create(self, validated_data):
        data = dict(validated_data)
        radial = data.pop('radial')
        return LambdaOptions(**data), radial


class ScanBlockSerializer(serializers.Serializer):
    refine_iters = fields.IntegerField(min_value=0, required=False, default=0)
    warm_start = fields.BooleanField(required=False, default=False)


class PohozaevBlockSerializer(serializers.Serializer):
    probe = fields.BooleanField(required=False, default=False)
    padding = fields.BooleanField(required=False, default=True)
    x0 = fields.FloatField(required=False, default=0.0)
    y0 = fields.FloatField(required=False, default=0.0)
    u = fields.CharField(required=False)
    v = fields.CharField(required=False)

    def validate(self, attrs):
        if ('u' in attrs) != ('v' in attrs):
            raise ValidationError({'u': 'pohozaev.u and pohozaev.v must be given together'})
        for name in ('u', 'v'):
            if name in attrs and not Path(attrs[name]).is_absolute():
                attrs[name] = str(self.context.get('base_dir', Path.cwd()) / attrs[name])
        return attrs


class RunConfigSerializer(serializers.Serializer):
    grid = GridSerializer()
    model = ModelBlockSerializer()
    h = WeightBlockSerializer(required=False)
    solver = SolverBlockSerializer(required=False)
    scan = ScanBlockSerializer(required=False)
    pohozaev = PohozaevBlockSerializer(required=False)
    seed = fields.IntegerField(min_value=0, required=False, default=0)
    out = fields.CharField(required=False)

    def get_fields(self):
        declared = super().get_fields()
        declared['lambda'] = LambdaBlockSerializer(required=False)
        return declared

    def create(self, validated_data):
        seed = validated_data.get('seed', 0)
        solver, threshold_stop = self.fields['solver'].create(validated_data.get('solver') or
                                              self.fields['solver'].validate({}))
        solver.seed = seed
        lambda_options, radial = self.fields['lambda'].create(validated_data.get('lambda') or
                                                              self.fields['lambda'].validate({'radial': [False]}))
        try:
            weight = self.fields['h'].create(validated_data.get('h') or {'kind': 'constant', 'params': {'c': 1.0}})
        except ValidationError as error:
            raise ValidationError({'h': error.detail}) from None
        scan = validated_data.get('scan') or {'refine_iters': 0, 'warm_start': False}
        pohozaev = validated_data.get('pohozaev') or {'probe': False, 'padding': True, 'x0': 0.0, 'y0': 0.0}
        return RunConfig(
            grid=self.fields['grid'].create(validated_data['grid']),
            models=self.fields['model'].create(dict(validated_data['model'])),
            weight=weight,
            solver=solver,
            lambda_options=lambda_options,
            lambda_radial=radial,
            scan=scan,
            pohozaev=pohozaev,
            seed=seed,
            out=validated_data.get('out'),
            threshold_stop=threshold_stop,
        )


# Reports


class NestedSerializer(serializers.Serializer):
    """Serializer whose nested children can drop fields listed in ``view_exclude``."""

    view_exclude = []

    def to_representation_exclude(self, instance, exclude=None):
        if exclude is None:
            exclude = []
        ret = {}
        for field in self._readable_fields:
            if field.field_name in exclude:
                continue
            attribute = field.get_attribute(instance)
            if attribute is None:
                ret[field.field_name] = None
            elif isinstance(field, (NestedSerializer, NestedListSerializer)):
                ret[field.field_name] = field.to_representation_exclude(attribute, exclude=exclude + self.view_exclude)
            else:
                ret[field.field_name] = field.to_representation(attribute)
        return ret

    def to_representation(self, instance):
        return self.to_representation_exclude(instance)

    class Meta:
        pass


class NestedListSerializer(serializers.ListSerializer):

    def to_representation_exclude(self, data, exclude=None):
        if isinstance(self.child, (NestedListSerializer, NestedSerializer)):
            return [self.child.to_representation_exclude(item, exclude) for item in data]
        return [self.child.to_representation(item) for item in data]

    def to_representation(self, data):
        return self.to_representation_exclude(data)


NestedSerializer.Meta.list_serializer_class = NestedListSerializer


class NumberField(fields.FloatField):
    """Float that survives strict JSON: non-finite values become strings."""

    def to_representation(self, value):
        value = float(value)
        return value if math.isfinite(value) else str(value)


class PairSummary(fields.Field):
    """A pair as norms and extrema; the samples themselves go to MGF1 files."""

    def to_representation(self, value):
        summary = {}
        for name, component in (('u', value.u), ('v', value.v)):
            values = component.values
            summary[name] = {
                'l2': float(np.sqrt(component.grid.cell * np.sum(values ** 2))),
                'max': float(values.max()),
                'min': float(values.min()),
            }
        summary['grid'] = list(value.grid.shape) + [value.grid.lx, value.grid.ly]
        return summary


class SolveReportSerializer(NestedSerializer):
    converged = fields.BooleanField()
    iterations = fields.IntegerField()
    energy = NumberField()
    nehari_residual = NumberField()
    el_residual = NumberField()
    el_residual_full = NumberField()
    semi_trivial = fields.BooleanField()
    boundary_decay = NumberField()
    start_index = fields.IntegerField()
    seed = fields.IntegerField()
    stop_reason = fields.CharField()
    grad_norm = NumberField()
    manifold_norm = NumberField()
    min_value = NumberField()
    nonnegative = fields.BooleanField()
    concentration_suspected = fields.BooleanField()
    symmetrization = fields.DictField()
    pair = PairSummary()
    history = fields.ListField()


class MultistartSerializer(NestedSerializer):
    best = SolveReportSerializer()
    reports = SolveReportSerializer(many=True)
    failures = fields.ListField()
    energy_scatter = NumberField()
    min_manifold_norm = NumberField()
    n_success = fields.IntegerField()
    view_exclude = ['pair', 'history']


class SobolevEstimateSerializer(NestedSerializer):
    s = NumberField()
    radial = fields.BooleanField()
    threshold = NumberField()
    converged = fields.BooleanField()
    descended_min = NumberField()
    corpus_min = NumberField()
    corpus_size = fields.IntegerField()
    seed = fields.IntegerField()
    corpus_violations = fields.IntegerField()

    def get_fields(self):
        declared = super().get_fields()
        declared['lambda'] = NumberField(source='lambda_')
        return declared


class KappaScanSerializer(NestedSerializer):
    kappas = fields.ListField(child=NumberField())
    energies = fields.ListField(child=NumberField())
    threshold = NumberField()
    converged = fields.ListField(child=fields.BooleanField())
    n_success = fields.ListField(child=fields.IntegerField())
    scatter = fields.ListField(child=NumberField())
    monotonicity_violations = fields.ListField()
    continuity_constant = NumberField()
    kappa_star_estimate = fields.ReadOnlyField()
    kappa_star_bracket = fields.ListField(child=NumberField(), required=False)


class PohozaevReportSerializer(NestedSerializer):
    r61 = NumberField()
    r62 = NumberField()
    r622 = NumberField()
    lhs61 = NumberField()
    rhs61 = NumberField()
    lhs62 = NumberField()
    rhs62 = NumberField()
    lhs622 = NumberField()
    rhs622 = NumberField()
    gap = NumberField()
    moment_check = fields.DictField()


class CandidateWitnessSerializer(NestedSerializer):
    start_index = fields.IntegerField()
    energy = NumberField()
    converged = fields.BooleanField()
    lhs622 = NumberField()
    rhs622 = NumberField()
    gap = NumberField()
    inconsistent = fields.BooleanField()
    residuals = PohozaevReportSerializer()


class NonexistenceReportSerializer(NestedSerializer):
    kappa = NumberField()
    hypothesis = fields.CharField()
    concluded = fields.BooleanField()
    violations = fields.ListField()
    candidates = CandidateWitnessSerializer(many=True)
    box_sensitivity = fields.DictField(required=False)
    view_exclude = ['residuals']


class OperatorCheckSerializer(NestedSerializer):
    name = fields.CharField()
    value = NumberField()
    tolerance = NumberField()
    passed = fields.BooleanField()


def describe_config(config):
    """Provenance block: the flat config as read plus the resolved model regime."""
    return {
        'config': dict(sorted(config.flat.items())),
        'seed': config.seed,
        'regime': config.models[0].regime,
        'weight': repr(config.weight),
    }

