from django.contrib import admin

from .models import SolveRun


@admin.register(SolveRun)
class SolveRunAdmin(admin.ModelAdmin):
    list_display = ("id", "solver", "instance", "outcome", "elapsed_ms", "created_at")
    list_filter = ("solver", "outcome")
