import json

from django.core.management.base import BaseCommand, CommandError

from experiments.config import append_run_log, load_run_config, prepare_output
from forge.exceptions import ForgeError, describe_exit_codes


def command_help(text):
    return f'{text} {describe_exit_codes()}'


class ForgeCommand(BaseCommand):
    """
    Shared options and error mapping for the experiment commands.

    Subclasses implement ``run(cfg, **options)`` and may add their own
    arguments in ``add_command_arguments``.
    """

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]

    def add_arguments(self, parser):
        parser.add_argument('--config', help='TOML run configuration')
        parser.add_argument('--seed', type=int, help='Root seed (u64)')
        parser.add_argument('--threads', type=int, help='Worker threads; results never depend on it')
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--train', help='Train split directory')
        parser.add_argument('--query', help='Query split directory')
        parser.add_argument('--gallery', help='Gallery split directory')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def run(self, cfg, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        cfg = None
        try:
            cfg = load_run_config(
                options['config'], options['seed'], options['threads'], options['out'],
                train=options['train'], query=options['query'], gallery=options['gallery'],
            )
            prepare_output(cfg, self.command_name)
            result = self.run(cfg, **options)
        except ForgeError as exc:
            out = cfg.out if cfg is not None else options['out']
            if out:
                append_run_log(out, self.command_name, 'failed', str(exc))
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

        append_run_log(cfg.out, self.command_name, 'ok')
        self.stdout.write(self.style.SUCCESS(json.dumps(result, sort_keys=True, default=str)))
