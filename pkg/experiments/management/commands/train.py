from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_train


class Command(ForgeCommand):
    help = command_help('Train the multi-head classifier and write model.bin, model.json and loss.csv.')

    def add_command_arguments(self, parser):
        parser.add_argument('--no-uit', action='store_true', help='Train without appearance transformations')

    def run(self, cfg, **options):
        return cmd_train(cfg, use_uit=not options['no_uit'])
