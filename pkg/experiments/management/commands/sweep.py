from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_sweep


class Command(ForgeCommand):
    help = command_help('Train on seeded subsets of the train identities and report R1 and mAP per count.')

    def add_command_arguments(self, parser):
        parser.add_argument('--counts', type=int, nargs='+', help='Identity counts to keep')
        parser.add_argument('--no-uit', action='store_true')

    def run(self, cfg, **options):
        return cmd_sweep(cfg, options['counts'], use_uit=not options['no_uit'])
