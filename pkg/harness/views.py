# harness/views.py
from rest_framework import generics
from rest_framework.permissions import IsAuthenticated

from .models import BenchResult
from .serializers import BenchResultSerializer


# -------------------------------
# Benchmark results listing
# -------------------------------
class BenchResultListView(generics.ListAPIView):
    """
    List stored benchmark rows, newest first.
      - ?solver=fast|foresight filters by solver
      - ?max_param=N filters a scaling suite
    """
    queryset = BenchResult.objects.all().order_by("-id")
    serializer_class = BenchResultSerializer
    permission_classes = [IsAuthenticated]

    def get_queryset(self):
        queryset = super().get_queryset()
        solver = self.request.query_params.get("solver")
        max_param = self.request.query_params.get("max_param")
        if solver:
            queryset = queryset.filter(solver=solver)
        if max_param and max_param.isdigit():
            queryset = queryset.filter(max_param=int(max_param))
        return queryset
