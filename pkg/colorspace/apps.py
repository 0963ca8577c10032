from django.apps import AppConfig


class ColorspaceConfig(AppConfig):
    name = 'colorspace'
