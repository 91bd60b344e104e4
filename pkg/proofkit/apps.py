from django.apps import AppConfig


class ProofkitConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'proofkit'
