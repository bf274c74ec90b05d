"""
Command-line flags shared by the commands that run the tracker.
"""

import argparse

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from tracking.appearance import AppearanceMode
from tracking.config import load_config
from tracking.exceptions import TrackingError
from tracking.geometry import SpatialMode

# option dest -> TrackerConfig field
OPTION_FIELDS = {
    'window': 'window_len',
    'sigma': 'sigma',
    'ema_sigma': 'ema_sigma',
    'beta_f': 'beta_f',
    'off': 'off',
    'n': 'n',
    'appearance': 'appearance_mode',
    'spatial': 'spatial_mode',
    'merge_cutoff': 'merge_cutoff',
    'stage1_gate': 'stage1_gate',
    'freeze_size': 'freeze_size',
}


def add_tracker_arguments(parser):
    group = parser.add_argument_group('tracker')
    group.add_argument('--preset', help='Preset de départ (settings.TRACKER_PRESETS)')
    group.add_argument(
        '--config', dest='config_file',
        help='Fichier clé = valeur, ou manifeste JSON d\'une exécution à rejouer',
    )
    group.add_argument('--window', type=int, help='Longueur des fenêtres de l\'étape 1 (frames)')
    group.add_argument('--sigma', type=float, help='Seuil de confiance du détecteur')
    group.add_argument('--ema-sigma', type=float, help='Seuil de rejet de l\'EMA (défaut: --sigma)')
    group.add_argument('--beta-f', type=float, help='Facteur EMA fixe')
    group.add_argument('--off', type=float, help='Décalage de la modulation spatiale')
    group.add_argument('--n', type=int, help='Fenêtre d\'estimation de la vitesse (frames)')
    group.add_argument('--appearance', choices=[m.value for m in AppearanceMode])
    group.add_argument('--spatial', choices=[m.value for m in SpatialMode])
    group.add_argument('--merge-cutoff', type=float, help='Seuil d\'arrêt de l\'UPGMA')
    group.add_argument('--stage1-gate', type=float, help='Distance cosinus max. entre frames adjacentes')
    group.add_argument(
        '--freeze-size', action=argparse.BooleanOptionalAction, default=None,
        help='Ne prédire que le centre (--no-freeze-size annule un fichier ou un preset)',
    )
    group.add_argument('--seed', type=int, default=0, help='Graine enregistrée dans le manifeste')


def tracker_config(options):
    """
    ``TrackerConfig`` from preset, config file and flags.

    Raises:
        CommandError: invalid preset, key or value.
    """
    overrides = {field: options.get(dest) for dest, field in OPTION_FIELDS.items()}
    try:
        return load_config(options.get('preset'), options.get('config_file'), overrides)
    except ValidationError as exc:
        raise CommandError('Configuration invalide: ' + '; '.join(exc.messages)) from exc
    except TrackingError as exc:
        raise CommandError(str(exc)) from exc
