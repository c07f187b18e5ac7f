from django.apps import AppConfig


class EmgConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'emg'
    verbose_name = 'EMG signals'
