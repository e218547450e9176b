from django.apps import AppConfig

class CpfixConfig(AppConfig):
    name = 'cpfix'
    verbose_name = 'CP semigroup fixed-point toolkit'
