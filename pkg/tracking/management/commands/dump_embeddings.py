from django.core.management.base import BaseCommand, CommandError

from tracking.exceptions import TrackingError
from tracking.mot_io import format_embeddings, read_embeddings


class Command(BaseCommand):
    help = 'Affiche le contenu d\'un fichier d\'embeddings (EMB1 ou CSV)'

    def add_arguments(self, parser):
        parser.add_argument('path')
        parser.add_argument('--limit', type=int, help='Nombre maximal d\'enregistrements affichés')

    def handle(self, *args, **options):
        try:
            table = read_embeddings(options['path'])
        except TrackingError as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(f'# dim={table.dim} enregistrements={len(table)}')
        for line in format_embeddings(table, options['limit']):
            self.stdout.write(line)
