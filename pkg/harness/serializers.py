# harness/serializers.py
from rest_framework import serializers

from .models import BenchResult


class BenchResultSerializer(serializers.ModelSerializer):
    solved = serializers.BooleanField(read_only=True)

    class Meta:
        model = BenchResult
        fields = "__all__"
        read_only_fields = ["recorded_at"]
