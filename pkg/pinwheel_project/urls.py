"""
URL configuration for pinwheel_project project.

API endpoints live under /api/; JWT tokens under /api/token/; docs under /swagger/ and /redoc/.
"""

# pinwheel_project/urls.py
from django.contrib import admin
from django.urls import path, include, re_path
from rest_framework import permissions
from rest_framework_simplejwt.views import TokenObtainPairView, TokenRefreshView
from drf_yasg.views import get_schema_view
from drf_yasg import openapi

# --- Swagger / API Docs ---
schema_view = get_schema_view(
    openapi.Info(
        title="Pinwheel Scheduling API",
        default_version="v1",
        description="Solve and verify pinwheel instances; browse stored solve runs and benchmark results",
        license=openapi.License(name="MIT License"),
    ),
    public=True,
    permission_classes=(permissions.AllowAny,),
)

urlpatterns = [
    # Admin
    path("admin/", admin.site.urls),

    # JWT
    path("api/token/", TokenObtainPairView.as_view(), name="token_obtain_pair"),
    path("api/token/refresh/", TokenRefreshView.as_view(), name="token_refresh"),

    # API endpoints
    path("api/solver/", include("solver.urls")),
    path("api/harness/", include("harness.urls")),

    # API docs (Swagger / ReDoc)
    re_path(r"^swagger(?P<format>\.json|\.yaml)$", schema_view.without_ui(cache_timeout=0), name="schema-json"),
    path("swagger/", schema_view.with_ui("swagger", cache_timeout=0), name="schema-swagger-ui"),
    path("redoc/", schema_view.with_ui("redoc", cache_timeout=0), name="schema-redoc"),
]
