from django.apps import AppConfig


class GroundstatesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'groundstates'
