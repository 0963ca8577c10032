from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_augment


class Command(ForgeCommand):
    help = command_help('Export transformed copies of the train images and a JSON-lines log of every draw.')

    def add_command_arguments(self, parser):
        parser.add_argument('--count', type=int, default=1, help='Copies per image')

    def run(self, cfg, **options):
        return cmd_augment(cfg, options['count'])
