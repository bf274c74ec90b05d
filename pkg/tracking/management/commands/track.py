from django.core.management.base import BaseCommand, CommandError

from tracking.association import track_sequence
from tracking.exceptions import TrackingError
from tracking.mot_io import default_embedding_path, read_detections, write_results
from tracking.runs import RunRecorder, manifest_path_for

from ._tracker_options import add_tracker_arguments, tracker_config


class Command(BaseCommand):
    help = 'Suit une séquence: détections MOT + embeddings -> fichier de résultats MOT'

    def add_arguments(self, parser):
        parser.add_argument('det_path', help='Fichier de détections MOT (det.txt)')
        parser.add_argument(
            '--embeddings', dest='emb_path',
            help='Embeddings EMB1 ou CSV (défaut: det.emb à côté des détections)',
        )
        parser.add_argument('--out', required=True, help='Fichier de résultats à écrire')
        add_tracker_arguments(parser)

    def handle(self, *args, **options):
        config = tracker_config(options)
        det_path = options['det_path']
        emb_path = options['emb_path'] or default_embedding_path(det_path)
        out = options['out']

        recorder = RunRecorder(
            'track',
            config=config.as_dict(),
            inputs={'detections': det_path, 'embeddings': emb_path},
            seed=options['seed'],
            manifest_path=manifest_path_for(out),
        )
        try:
            with recorder:
                detections = read_detections(det_path, config.sigma, emb_path)
                trajectories = track_sequence(detections, config)
                write_results(trajectories, out)
                recorder.add_output('results', out)
        except (TrackingError, OSError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(
            self.style.SUCCESS(
                f'{len(trajectories)} trajectoire(s) pour {len(detections)} détection(s) '
                f'écrites dans {out} (preset {config.preset}, {recorder.wall_time:.2f}s)'
            )
        )
