from rest_framework import serializers

from .models import SPLIT_CHOICES, PreprocessConfig


class ManifestEntrySerializer(serializers.Serializer):
    """One line of a JSON-lines dataset manifest"""
    path = serializers.CharField()
    identity = serializers.IntegerField()
    camera = serializers.IntegerField(min_value=0)

    def validate_path(self, value):
        if value.startswith('/') or '..' in value.split('/'):
            raise serializers.ValidationError('Manifest paths must be relative to the dataset directory.')
        return value


class DatasetSummarySerializer(serializers.Serializer):
    """Counts per identity and per camera for one ingested split"""
    split = serializers.ChoiceField(choices=SPLIT_CHOICES)
    samples = serializers.IntegerField(min_value=0)
    identities = serializers.IntegerField(min_value=0)
    cameras = serializers.IntegerField(min_value=0)
    per_identity = serializers.DictField(child=serializers.IntegerField())
    per_camera = serializers.DictField(child=serializers.IntegerField())
    skipped = serializers.ListField(child=serializers.CharField())


class PreprocessConfigSerializer(serializers.Serializer):
    """Serializer for the [preprocess] section of a run configuration"""
    width = serializers.IntegerField(min_value=1, required=False)
    height = serializers.IntegerField(min_value=1, required=False)
    padding = serializers.IntegerField(min_value=0, required=False)
    flip_probability = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)

    def create(self, validated_data):
        return PreprocessConfig.from_settings(**validated_data)
