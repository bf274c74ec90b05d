from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from tracking.config import read_key_value_file
from tracking.exceptions import TrackingError
from tracking.runs import RunRecorder, manifest_path_for
from tracking.synthgen import generate, parse_scenario


def parse_assignments(items):
    """
    ``["key=value", ...]`` -> dict.
    """
    values = {}
    for item in items or ():
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise CommandError(f'--set attend clé=valeur, reçu {item!r}')
        values[key.strip().replace('-', '_')] = value.strip()
    return values


def build_scenario(scenario_file=None, assignments=None, seed=None):
    """
    ``settings.SYNTH_DEFAULTS`` < scenario file < ``--set`` < ``--seed``.
    """
    values = dict(getattr(settings, 'SYNTH_DEFAULTS', {}))
    if scenario_file:
        values.update(read_key_value_file(scenario_file))
    values.update(parse_assignments(assignments))
    if seed is not None:
        values['seed'] = seed
    return parse_scenario(values)


class Command(BaseCommand):
    help = 'Génère une séquence synthétique (gt, détections, embeddings) au format MOT'

    def add_arguments(self, parser):
        parser.add_argument('--scenario', help='Fichier clé = valeur (ou manifeste JSON)')
        parser.add_argument('--out', required=True, help='Dossier de sortie')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--set', action='append', dest='assignments', metavar='CLÉ=VALEUR')

    def handle(self, *args, **options):
        try:
            scenario = build_scenario(options['scenario'], options['assignments'], options['seed'])
        except TrackingError as exc:
            raise CommandError(str(exc)) from exc

        recorder = RunRecorder(
            'synth',
            config=scenario.as_dict(),
            inputs={'scenario': options['scenario'] or ''},
            seed=scenario.seed,
            manifest_path=manifest_path_for(options['out']),
        )
        try:
            with recorder:
                paths = generate(scenario, options['out'])
                for name in ('gt', 'det', 'embeddings', 'scenario'):
                    recorder.add_output(name, getattr(paths, name))
        except (TrackingError, OSError, ValueError) as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(
            self.style.SUCCESS(
                f'Scénario généré dans {paths.root}: {scenario.n_targets} cible(s), '
                f'{scenario.n_frames} frame(s), seed {scenario.seed}'
            )
        )
