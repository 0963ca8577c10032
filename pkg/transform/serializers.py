from rest_framework import serializers

from .models import FACTORS, TransformParams, TransformSpace


class TransformParamsSerializer(serializers.Serializer):
    """Serializer for one sampled parameter vector (augment logs, replay)"""
    hue_shift = serializers.FloatField()
    saturation = serializers.FloatField()
    lightness = serializers.FloatField()
    contrast = serializers.FloatField()

    def create(self, validated_data):
        return TransformParams(**validated_data)


class FactorRangeField(serializers.ListField):
    child = serializers.FloatField()

    def __init__(self, **kwargs):
        super().__init__(min_length=2, max_length=2, **kwargs)


class TransformSpaceSerializer(serializers.Serializer):
    """Serializer for the [transform] section of a run configuration"""
    hue = FactorRangeField(required=False)
    saturation = FactorRangeField(required=False)
    lightness = FactorRangeField(required=False)
    contrast = FactorRangeField(required=False)
    enabled = serializers.ListField(
        child=serializers.ChoiceField(choices=FACTORS), required=False, allow_empty=True
    )
    order = serializers.ListField(child=serializers.ChoiceField(choices=FACTORS), required=False)
    luma_weights = serializers.ListField(
        child=serializers.FloatField(min_value=0.0), min_length=3, max_length=3, required=False
    )

    def validate(self, attrs):
        for factor in FACTORS:
            if factor in attrs:
                low, high = attrs[factor]
                if low > high:
                    raise serializers.ValidationError({factor: f'min {low} exceeds max {high}.'})
        order = attrs.get('order')
        if order is not None and sorted(order) != sorted(FACTORS):
            raise serializers.ValidationError({'order': f'Must list each of {list(FACTORS)} exactly once.'})
        return attrs

    def create(self, validated_data):
        overrides = {}
        for factor in FACTORS:
            if factor in validated_data:
                overrides[factor] = tuple(validated_data[factor])
        if 'enabled' in validated_data:
            overrides['enabled'] = frozenset(validated_data['enabled'])
        if 'order' in validated_data:
            overrides['order'] = tuple(validated_data['order'])
        if 'luma_weights' in validated_data:
            overrides['luma_weights'] = tuple(validated_data['luma_weights'])
        return TransformSpace.from_settings(**overrides)
