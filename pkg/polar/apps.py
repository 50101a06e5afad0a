from django.apps import AppConfig


class PolarConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'polar'
    verbose_name = 'Polar Transform and Orbit Decoding'
