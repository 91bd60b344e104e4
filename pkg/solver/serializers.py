# solver/serializers.py
from rest_framework import serializers

from core.exceptions import PinwheelError
from core.utils import Instance, Schedule
from fastsolver.utils import SOLVER_NAMES
from .models import SolveRun


class SolveRunSerializer(serializers.ModelSerializer):
    cycle_length = serializers.IntegerField(read_only=True)

    class Meta:
        model = SolveRun
        fields = "__all__"
        read_only_fields = ["outcome", "schedule", "elapsed_ms", "created_at"]


class InstanceField(serializers.CharField):
    """Comma-separated periods such as "2,4,8" or "3/2,5"; parsed to a canonical Instance."""

    def to_internal_value(self, data):
        text = super().to_internal_value(data)
        try:
            return Instance.parse(text)
        except PinwheelError as e:
            raise serializers.ValidationError(str(e))


class SolveRequestSerializer(serializers.Serializer):
    """
    Solve request payload.
    - instance: comma-separated periods
    - solver: foresight (complete baseline) or fast (partition folding)
    """
    instance = InstanceField()
    solver = serializers.ChoiceField(choices=SOLVER_NAMES, default="fast")
    timeout_ms = serializers.IntegerField(min_value=1, required=False)
    complete = serializers.BooleanField(default=True)

    def validate(self, attrs):
        if attrs["solver"] == "fast" and not attrs["instance"].is_integral:
            raise serializers.ValidationError({"instance": "the fast solver takes integer periods only"})
        return attrs


class VerifyRequestSerializer(serializers.Serializer):
    instance = InstanceField()
    schedule = serializers.CharField()

    def validate_schedule(self, value):
        try:
            return Schedule.parse(value)
        except PinwheelError as e:
            raise serializers.ValidationError(str(e))
