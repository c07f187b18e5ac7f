from django.apps import AppConfig


class HdcConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'hdc'
    verbose_name = 'Hyperdimensional computing'
