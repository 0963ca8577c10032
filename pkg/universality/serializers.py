from rest_framework import serializers

from transform.models import FACTORS

from .models import CODE_OF


class FactorInvarianceSerializer(serializers.Serializer):
    mean = serializers.FloatField(min_value=0)
    std = serializers.FloatField(min_value=0)


class InvarianceReportSerializer(serializers.Serializer):
    """JSON view of an InvarianceReport, keyed by factor code (H, S, L, C)"""
    sample_count = serializers.IntegerField(min_value=1)
    representation = serializers.CharField()
    distance = serializers.CharField()
    feature = serializers.SerializerMethodField()
    prediction = serializers.SerializerMethodField()
    draws = serializers.SerializerMethodField()

    def _by_code(self, stats):
        return {CODE_OF[f]: FactorInvarianceSerializer(stats[f]).data for f in FACTORS if f in stats}

    def get_feature(self, obj):
        return self._by_code(obj.feature)

    def get_prediction(self, obj):
        return self._by_code(obj.prediction)

    def get_draws(self, obj):
        return {CODE_OF[f]: list(obj.draws[f]) for f in FACTORS if f in obj.draws}
