from experiments.management.base import ForgeCommand, command_help
from experiments.runner import cmd_eval_external


class Command(ForgeCommand):
    help = command_help('Score externally computed embeddings with the same protocol as eval.')

    def add_command_arguments(self, parser):
        parser.add_argument('--query-embeddings', required=True)
        parser.add_argument('--query-meta', required=True)
        parser.add_argument('--gallery-embeddings', required=True)
        parser.add_argument('--gallery-meta', required=True)

    def run(self, cfg, **options):
        return cmd_eval_external(
            cfg, options['query_embeddings'], options['query_meta'],
            options['gallery_embeddings'], options['gallery_meta'],
        )
