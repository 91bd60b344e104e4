# solver/urls.py
from django.urls import path
from . import views

urlpatterns = [
    # Solve an instance (POST) / info (GET)
    path('solve/', views.SolveView.as_view(), name='solver_solve'),
    path('verify/', views.VerifyView.as_view(), name='solver_verify'),
    path('runs/', views.SolveRunListView.as_view(), name='solver_runs'),
]
