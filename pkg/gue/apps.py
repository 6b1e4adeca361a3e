from django.apps import AppConfig


class GueConfig(AppConfig):
    name = 'gue'
