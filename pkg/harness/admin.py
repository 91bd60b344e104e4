from django.contrib import admin

from .models import BenchResult


@admin.register(BenchResult)
class BenchResultAdmin(admin.ModelAdmin):
    list_display = ("id", "solver", "instance", "outcome", "elapsed_ms", "max_param", "recorded_at")
    list_filter = ("solver", "outcome", "max_param")
