from django.apps import AppConfig


class EuclidConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'euclid'
    verbose_name = 'Euclidean decoding problem'
