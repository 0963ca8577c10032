from rest_framework import serializers

from .models import DescriptorConfig


class DescriptorConfigSerializer(serializers.Serializer):
    """Serializer for the [descriptor] section of a run configuration"""
    m = serializers.IntegerField(min_value=1, required=False)
    bins_per_channel = serializers.IntegerField(min_value=2, required=False)

    def create(self, validated_data):
        return DescriptorConfig.from_settings(**validated_data)


class EmbeddingMetaSerializer(serializers.Serializer):
    """One line of an embedding meta file: who and which camera a row belongs to"""
    identity = serializers.IntegerField()
    camera = serializers.IntegerField(min_value=0)
