from datetime import timedelta

from django.conf import settings
from django.core.management.base import BaseCommand
from django.utils import timezone

from tracking.models import TrackingRun


class Command(BaseCommand):
    help = 'Marque en échec les exécutions restées "en cours" trop longtemps'

    def add_arguments(self, parser):
        parser.add_argument(
            '--hours', type=float,
            help='Âge limite en heures (défaut: TRACKING_STALE_RUN_HOURS)',
        )

    def handle(self, *args, **options):
        """
        Find and fail all stale runs.
        """
        hours = options['hours']
        if hours is None:
            hours = settings.TRACKING_STALE_RUN_HOURS
        stale_runs = TrackingRun.objects.filter(
            statut='en_cours',
            date_debut__lt=timezone.now() - timedelta(hours=hours)
        )

        count = stale_runs.count()

        if count == 0:
            self.stdout.write(
                self.style.SUCCESS('Aucune exécution bloquée trouvée.')
            )
            return

        for run in stale_runs:
            run.fail(f'Interrompue (toujours en cours après {hours:g}h)')
            self.stdout.write(
                self.style.SUCCESS(
                    f'Exécution fermée: {run.get_kind_display()} #{run.pk} '
                    f'(démarrée le {run.date_debut.strftime("%d/%m/%Y %H:%M")})'
                )
            )

        self.stdout.write(
            self.style.SUCCESS(
                f'\n✅ {count} exécution(s) bloquée(s) marquée(s) en échec.'
            )
        )
