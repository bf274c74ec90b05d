from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from tracking.config import read_key_value_file
from tracking.exceptions import TrackingError
from tracking.experiments import (
    GRID_MODES, DatasetSource, SyntheticSource, grid_points, parse_grid, parse_grid_items, parse_seeds,
    run_sweep, summarize,
)
from tracking.runs import RunRecorder, manifest_path_for

from ._tracker_options import add_tracker_arguments, tracker_config
from .synth import build_scenario


class Command(BaseCommand):
    help = 'Balayage d\'ablation: un suivi + une évaluation par point de grille et par graine (CSV long)'

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group()
        source.add_argument('--scenario', help='Scénario synthétique (clé = valeur)')
        source.add_argument('--dataset', help='Dossier de séquences <seq>/det/det.txt + <seq>/gt/gt.txt')
        parser.add_argument('--set', action='append', dest='assignments', metavar='CLÉ=VALEUR',
                            help='Surcharge du scénario synthétique')
        parser.add_argument('--grid', action='append', default=[], metavar='PARAM=V1,V2',
                            help='Valeurs d\'un paramètre (répétable), ex. n=2..14 ou spatial=iou,dgiou')
        parser.add_argument('--grid-file', help='Grille en fichier clé = valeurs')
        parser.add_argument(
            '--grid-mode', choices=GRID_MODES, default='single',
            help='single: un paramètre à la fois; product: toutes les combinaisons; '
                 'steps: changements cumulés dans l\'ordre de la grille',
        )
        parser.add_argument('--seeds', default='0', help='Graines, ex. 0..19 ou 1,4,7')
        parser.add_argument('--jobs', type=int, default=1, help='Processus parallèles')
        parser.add_argument('--out', required=True, help='CSV long (point, param, value, seed, metric, score, error)')
        parser.add_argument('--summary', help='CSV moyenne/écart-type par point et métrique')
        add_tracker_arguments(parser)

    def handle(self, *args, **options):
        config = tracker_config(options)
        try:
            spec = read_key_value_file(options['grid_file']) if options['grid_file'] else {}
            grid = parse_grid(spec)
            grid.update(parse_grid_items(options['grid']))
            seeds = parse_seeds(options['seeds'])
            if options['dataset']:
                source = DatasetSource(options['dataset'])
                seeds = seeds[:1]
                inputs = {'dataset': options['dataset']}
            else:
                scenario = build_scenario(options['scenario'], options['assignments'])
                source = SyntheticSource(scenario)
                inputs = {'scenario': options['scenario'] or '', 'scenario_values': scenario.as_dict()}
        except (TrackingError, OSError, ValueError) as exc:
            raise CommandError(str(exc)) from exc
        if not grid:
            raise CommandError('Grille vide: utiliser --grid param=v1,v2 ou --grid-file')
        if options['jobs'] < 1:
            raise CommandError('--jobs doit être >= 1')

        out = Path(options['out'])
        inputs['grid'] = {param: [str(v) for v in values] for param, values in grid.items()}
        inputs['seeds'] = seeds
        inputs['grid_mode'] = options['grid_mode']
        recorder = RunRecorder(
            'sweep',
            config=config.as_dict(),
            inputs=inputs,
            seed=seeds[0],
            manifest_path=manifest_path_for(out),
        )
        try:
            with recorder:
                results = run_sweep(source, config, grid, seeds, jobs=options['jobs'], mode=options['grid_mode'])
                out.parent.mkdir(parents=True, exist_ok=True)
                results.to_csv(out, index=False, float_format='%.6f', lineterminator='\n')
                recorder.add_output('csv', out)
                summary = summarize(results)
                if options['summary']:
                    summary.to_csv(options['summary'], index=False, float_format='%.6f', lineterminator='\n')
                    recorder.add_output('summary', options['summary'])
        except (TrackingError, OSError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        n_points = len(grid_points(grid, options['grid_mode']))
        failures = results[results['metric'] == 'error']
        for _, row in failures.iterrows():
            self.stdout.write(
                self.style.WARNING(f'Point {row["point"]} ({row["param"]}={row["value"]}, seed {row["seed"]}): {row["error"]}')
            )
        main = summary[summary['metric'].isin(['IDF1', 'MOTA'])]
        if not main.empty:
            self.stdout.write(main.to_string(index=False, float_format=lambda v: f'{v:.4f}'))
        self.stdout.write(
            self.style.SUCCESS(
                f'{n_points} point(s) x {len(seeds)} graine(s), '
                f'{len(failures)} échec(s), écrit dans {out}'
            )
        )
