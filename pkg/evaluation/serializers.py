from rest_framework import serializers

from .models import EvalProtocol


class EvalProtocolSerializer(serializers.Serializer):
    """Serializer for the [eval] section of a run configuration"""
    exclude_same_camera_same_id = serializers.BooleanField(required=False)
    ranks_reported = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False, allow_empty=False)

    def validate_ranks_reported(self, value):
        if value != sorted(value):
            raise serializers.ValidationError('Ranks must be listed in ascending order.')
        return value

    def create(self, validated_data):
        if 'ranks_reported' in validated_data:
            validated_data['ranks_reported'] = tuple(validated_data['ranks_reported'])
        return EvalProtocol.from_settings(**validated_data)


class QueryResultSerializer(serializers.Serializer):
    query = serializers.IntegerField()
    identity = serializers.IntegerField()
    camera = serializers.IntegerField()
    ap = serializers.FloatField()
    first_hit = serializers.IntegerField()


class EvalReportSerializer(serializers.Serializer):
    """Read-only JSON view of an EvalReport"""
    variant = serializers.CharField()
    protocol = serializers.SerializerMethodField()
    ranks = serializers.DictField(child=serializers.FloatField())
    map = serializers.FloatField()
    cmc = serializers.SerializerMethodField()
    num_valid_queries = serializers.IntegerField()
    excluded_queries = serializers.ListField(child=serializers.IntegerField())
    per_query = QueryResultSerializer(many=True)

    def get_protocol(self, obj):
        return obj.protocol.as_dict()

    def get_cmc(self, obj):
        return [float(x) for x in obj.cmc]
