# harness/urls.py
from django.urls import path
from . import views

urlpatterns = [
    path('results/', views.BenchResultListView.as_view(), name='bench_results'),
]
