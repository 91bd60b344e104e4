from django.db import models


class BenchResult(models.Model):
    """A stored benchmark row (one instance, one solver)."""
    instance = models.TextField()
    solver = models.CharField(max_length=20)
    outcome = models.CharField(max_length=20)
    elapsed_ms = models.FloatField()
    seed = models.BigIntegerField(blank=True, null=True)
    max_param = models.IntegerField(blank=True, null=True)
    recorded_at = models.DateTimeField(auto_now_add=True)

    @property
    def solved(self):
        return self.outcome == "schedulable"

    def __str__(self):
        return f"{self.solver} [{self.instance}] {self.outcome} {self.elapsed_ms:.1f}ms"
