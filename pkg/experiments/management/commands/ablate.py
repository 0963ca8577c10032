from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_ablate


class Command(ForgeCommand):
    help = command_help('Train and evaluate baseline, +H, +S, +L, +C and +All.')

    def run(self, cfg, **options):
        return cmd_ablate(cfg)
