from django.db import models


class SolveRun(models.Model):
    """One persisted solve request."""
    SOLVER_CHOICES = [("foresight", "Foresight"), ("fast", "Fast")]
    OUTCOME_CHOICES = [
        ("schedulable", "Schedulable"),
        ("unschedulable", "Unschedulable"),
        ("timeout", "Timeout"),
    ]

    instance = models.TextField()
    solver = models.CharField(max_length=20, choices=SOLVER_CHOICES, default="fast")
    outcome = models.CharField(max_length=20, choices=OUTCOME_CHOICES)
    schedule = models.TextField(blank=True, default="")
    elapsed_ms = models.FloatField(default=0.0)
    created_at = models.DateTimeField(auto_now_add=True)

    @property
    def cycle_length(self):
        if not self.schedule:
            return 0
        return len(self.schedule.split(","))

    def __str__(self):
        return f"{self.solver} [{self.instance}] -> {self.outcome}"
