from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_universality


class Command(ForgeCommand):
    help = command_help('Feature- and prediction-level invariance under each individual transformation.')

    def add_command_arguments(self, parser):
        parser.add_argument('--model', help='Trained checkpoint; without one only descriptors are analysed')
        parser.add_argument('--split', choices=['train', 'query', 'gallery'], default='gallery')

    def run(self, cfg, **options):
        return cmd_universality(cfg, options['model'], options['split'])
