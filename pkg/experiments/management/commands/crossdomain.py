from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_crossdomain


class Command(ForgeCommand):
    help = command_help('Train once on the seed domain, with and without UIT, and evaluate on every target.')

    def run(self, cfg, **options):
        return cmd_crossdomain(cfg)
