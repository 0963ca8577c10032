from rest_framework import serializers

from features.serializers import DescriptorConfigSerializer

from .models import TrainConfig


class TrainConfigSerializer(serializers.Serializer):
    """Serializer for the [train] section of a run configuration"""
    lr = serializers.FloatField(required=False)
    lr_step = serializers.IntegerField(min_value=0, required=False)
    lr_gamma = serializers.FloatField(min_value=0.0, required=False)
    momentum = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)
    weight_decay = serializers.FloatField(min_value=0.0, required=False)
    batch_size = serializers.IntegerField(min_value=1, required=False)
    epochs = serializers.IntegerField(min_value=1, required=False)
    smoothing = serializers.FloatField(required=False)
    geometric = serializers.BooleanField(required=False)

    def validate_lr(self, value):
        if value <= 0:
            raise serializers.ValidationError('Learning rate must be positive.')
        return value

    def validate_smoothing(self, value):
        if not 0.0 <= value < 1.0:
            raise serializers.ValidationError('Label smoothing must lie in [0, 1).')
        return value

    def create(self, validated_data):
        return TrainConfig.from_settings(**validated_data)


class StoredTrainConfigSerializer(TrainConfigSerializer):
    """The recipe recorded in a checkpoint: every field present, nothing extra"""
    seed = serializers.IntegerField(min_value=0)

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for field in self.fields.values():
            field.required = True

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: 'Unknown field.' for key in unknown})
        return super().to_internal_value(data)


class CheckpointSidecarSerializer(serializers.Serializer):
    """JSON sidecar written next to the float32 weight file"""
    heads = serializers.IntegerField(min_value=2)
    classes = serializers.IntegerField(min_value=1)
    segment_dim = serializers.IntegerField(min_value=1)
    descriptor = DescriptorConfigSerializer()
    identities = serializers.ListField(child=serializers.IntegerField())
    train_config = StoredTrainConfigSerializer()
    use_uit = serializers.BooleanField()
    seed = serializers.IntegerField(min_value=0)

    def validate(self, attrs):
        if len(attrs['identities']) != attrs['classes']:
            raise serializers.ValidationError(
                {'identities': f'Expected {attrs["classes"]} labels, got {len(attrs["identities"])}.'}
            )
        return attrs
