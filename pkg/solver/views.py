# solver/views.py
import logging
import time

from rest_framework import generics, status
from rest_framework.permissions import IsAuthenticated
from rest_framework.response import Response

from core.exceptions import PinwheelError
from core.utils import verify_schedule
from fastsolver.utils import run_solver
from .models import SolveRun
from .serializers import SolveRequestSerializer, SolveRunSerializer, VerifyRequestSerializer

logger = logging.getLogger(__name__)


# -------------------------------
# Solve an instance
# -------------------------------
class SolveView(generics.GenericAPIView):
    """
    POST /api/solver/solve/
      - Accepts JSON { "instance": "2,4,8", "solver": "fast" | "foresight", "timeout_ms": 1000, "complete": true }
      - Stores a SolveRun and returns:
          { "result": {...}, "latency_seconds": 0.123 }
    GET returns a small usage message.
    """
    serializer_class = SolveRequestSerializer
    permission_classes = [IsAuthenticated]

    def get(self, request):
        return Response({
            "message": "This endpoint decides whether a pinwheel instance is schedulable.",
            "usage": "Send a POST request to /api/solver/solve/ with {'instance': '2,4,8', 'solver': 'fast' or 'foresight'}",
            "example": {"instance": "2,4,8", "solver": "foresight", "timeout_ms": 1000},
        })

    def post(self, request):
        serializer = self.get_serializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data
        instance = data["instance"]

        logger.info("Solve of %s with %s requested by %s", instance, data["solver"], request.user.username)
        start_time = time.time()
        try:
            outcome = run_solver(data["solver"], instance, time_limit_ms=data.get("timeout_ms"), complete=data["complete"])
        except PinwheelError as e:
            logger.exception("Solve of %s failed", instance)
            return Response({"error": str(e)}, status=status.HTTP_400_BAD_REQUEST)

        run = SolveRun.objects.create(
            instance=instance.text(),
            solver=data["solver"],
            outcome=outcome.status.value,
            schedule=outcome.schedule.text() if outcome.schedule else "",
            elapsed_ms=outcome.elapsed_ms,
        )
        latency = round(time.time() - start_time, 3)
        logger.info("SolveRun %s saved: %s in %.3fs", run.id, outcome.status.value, latency)

        return Response({
            "result": SolveRunSerializer(run).data,
            "latency_seconds": latency,
        }, status=status.HTTP_200_OK)


# -------------------------------
# Verify a schedule
# -------------------------------
class VerifyView(generics.GenericAPIView):
    """
    POST /api/solver/verify/ with { "instance": "2,4,4", "schedule": "1,2,1,3" }
    Returns { "valid": true } or { "valid": false, "violation": {...} }.
    """
    serializer_class = VerifyRequestSerializer
    permission_classes = [IsAuthenticated]

    def post(self, request):
        serializer = self.get_serializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        try:
            violation = verify_schedule(serializer.validated_data["instance"], serializer.validated_data["schedule"])
        except PinwheelError as e:
            return Response({"error": str(e)}, status=status.HTTP_400_BAD_REQUEST)
        if violation is None:
            return Response({"valid": True})
        return Response({
            "valid": False,
            "violation": {
                "job": violation.job,
                "start": violation.start,
                "length": violation.length,
                "required": violation.required,
                "found": violation.found,
            },
        })


# -------------------------------
# Stored runs
# -------------------------------
class SolveRunListView(generics.ListAPIView):
    queryset = SolveRun.objects.all().order_by("-id")
    serializer_class = SolveRunSerializer
    permission_classes = [IsAuthenticated]

    def get_queryset(self):
        queryset = super().get_queryset()
        outcome = self.request.query_params.get("outcome")
        if outcome:
            queryset = queryset.filter(outcome=outcome)
        solver = self.request.query_params.get("solver")
        if solver:
            queryset = queryset.filter(solver=solver)
        return queryset
