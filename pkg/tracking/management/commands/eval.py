from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from tracking.exceptions import TrackingError
from tracking.metrics import evaluate
from tracking.mot_io import read_ground_truth, read_results
from tracking.runs import RunRecorder, manifest_path_for


def sequence_pairs(gt_path, res_path, name=None):
    """
    ``(name, gt_file, res_file)`` triples.

    Two files give one sequence. Two directories follow the benchmark
    layout: ``<gt>/<seq>/gt/gt.txt`` against ``<res>/<seq>.txt``.
    """
    gt_path, res_path = Path(gt_path), Path(res_path)
    if gt_path.is_dir() != res_path.is_dir():
        raise CommandError('gt et résultats doivent être deux fichiers ou deux dossiers')
    if not gt_path.is_dir():
        return [(name or res_path.stem, gt_path, res_path)]
    triples = []
    for seq_gt in sorted(gt_path.glob('*/gt/gt.txt')):
        seq = seq_gt.parent.parent.name
        seq_res = res_path / f'{seq}.txt'
        if not seq_res.is_file():
            raise CommandError(f'Résultats manquants pour {seq}: {seq_res}')
        triples.append((seq, seq_gt, seq_res))
    if not triples:
        raise CommandError(f'Aucune séquence trouvée dans {gt_path} (attendu <seq>/gt/gt.txt)')
    return triples


class Command(BaseCommand):
    help = 'Évalue des résultats MOT (CLEAR-MOT, IDF1) contre la vérité terrain'

    def add_arguments(self, parser):
        parser.add_argument('gt', help='Fichier gt.txt ou dossier de séquences')
        parser.add_argument('res', help='Fichier de résultats ou dossier <seq>.txt')
        parser.add_argument('--csv', help='Écrit le tableau (séquences + AGGREGATE) en CSV')
        parser.add_argument('--iou', type=float, default=0.5, help='Seuil IoU des appariements')
        parser.add_argument('--name', help='Nom de la séquence (mode fichier)')

    def handle(self, *args, **options):
        triples = sequence_pairs(options['gt'], options['res'], options['name'])
        out = options['csv'] or options['res']
        recorder = RunRecorder(
            'eval',
            config={'iou_threshold': options['iou']},
            inputs={'gt': options['gt'], 'res': options['res']},
            manifest_path=manifest_path_for(Path(out), kind='eval'),
        )
        try:
            with recorder:
                pairs = [(name, read_ground_truth(gt), read_results(res)) for name, gt, res in triples]
                report = evaluate(pairs, options['iou'])
                recorder.record_report(report)
                if options['csv']:
                    report.to_csv(options['csv'])
                    recorder.add_output('csv', options['csv'])
        except (TrackingError, OSError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(report.to_text())
        aggregate = report.aggregate
        self.stdout.write(
            self.style.SUCCESS(
                f'\n{len(report.sequences)} séquence(s): MOTA {aggregate.clear.mota:.4f}, '
                f'IDF1 {aggregate.identity.idf1:.4f}'
            )
        )
