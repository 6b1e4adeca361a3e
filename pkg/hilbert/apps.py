from django.apps import AppConfig


class HilbertConfig(AppConfig):
    name = 'hilbert'
