from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_eval


class Command(ForgeCommand):
    help = command_help('Rank the gallery for every query and report CMC and mAP.')

    def add_command_arguments(self, parser):
        parser.add_argument('--model', help='Checkpoint to embed with; descriptors are used without one')
        parser.add_argument('--export', action='store_true', help='Also write query/gallery embeddings and meta')

    def run(self, cfg, **options):
        return cmd_eval(cfg, options['model'], options['export'])
