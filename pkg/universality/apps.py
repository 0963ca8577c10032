from django.apps import AppConfig


class UniversalityConfig(AppConfig):
    name = 'universality'
