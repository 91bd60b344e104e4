from django.apps import AppConfig


class FastsolverConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'fastsolver'
