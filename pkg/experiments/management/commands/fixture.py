from experiments.fixture import FixtureSpec
from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_fixture


class Command(ForgeCommand):
    help = command_help('Generate the synthetic seed and target domains plus a ready-to-use fixture.toml.')

    def add_command_arguments(self, parser):
        parser.add_argument('--identities', type=int, default=20, help='Train identities per domain')
        parser.add_argument('--test-identities', type=int, default=10)
        parser.add_argument('--cameras', type=int, default=3)
        parser.add_argument('--per-camera', type=int, default=3, help='Images per identity and camera')
        parser.add_argument('--width', type=int, default=16)
        parser.add_argument('--height', type=int, default=48)
        parser.add_argument('--no-targets', action='store_true', help='Only generate the seed domain')

    def run(self, cfg, **options):
        spec = FixtureSpec(
            train_identities=options['identities'],
            test_identities=options['test_identities'],
            cameras=options['cameras'],
            per_camera=options['per_camera'],
            width=options['width'],
            height=options['height'],
            **({'targets': {}} if options['no_targets'] else {}),
        )
        return cmd_fixture(cfg, spec)
