"""
Tracker hyperparameters and their layered loading.

Precedence: preset < config file < explicit overrides (command-line flags).
"""

import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .appearance import AppearanceMode
from .exceptions import ScenarioError
from .geometry import SpatialMode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrackerConfig:
    """
    All association hyperparameters. Defaults are the MOT17 preset.
    """
    window_len: int = 6
    sigma: float = 0.7
    ema_sigma: Optional[float] = None
    beta_f: float = 0.822
    off: float = 0.525
    n: int = 9
    appearance_mode: AppearanceMode = AppearanceMode.DYNAMIC
    spatial_mode: SpatialMode = SpatialMode.DGIOU
    merge_cutoff: float = 0.5
    stage1_gate: float = 0.4
    freeze_size: bool = False
    preset: str = 'mot17'

    def __post_init__(self):
        object.__setattr__(self, 'appearance_mode', AppearanceMode(self.appearance_mode))
        object.__setattr__(self, 'spatial_mode', SpatialMode(self.spatial_mode))
        if self.window_len < 1:
            raise ValueError(f'window_len doit être >= 1, reçu {self.window_len}')
        if self.n < 2:
            raise ValueError(f'n doit être >= 2, reçu {self.n}')
        for name in ('sigma', 'beta_f'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f'{name} doit être dans [0, 1], reçu {value}')
        if not self.rejection_threshold < 1.0:
            raise ValueError('Le seuil de rejet EMA doit être < 1')
        if self.off < 0 or self.merge_cutoff < 0 or self.stage1_gate < 0:
            raise ValueError('off, merge_cutoff et stage1_gate doivent être positifs')

    @property
    def rejection_threshold(self):
        """
        Confidence under which a detection is kept out of the EMA.
        """
        return self.sigma if self.ema_sigma is None else self.ema_sigma

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        data = asdict(self)
        data['appearance_mode'] = self.appearance_mode.value
        data['spatial_mode'] = self.spatial_mode.value
        return data


CONFIG_FIELDS = tuple(f.name for f in fields(TrackerConfig))


def read_key_value_file(path):
    """
    Parse a ``key = value`` file (``#`` starts a comment).

    A ``.json`` file is read as a run manifest: its ``config`` object is
    returned, so a previous run can be replayed exactly.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ScenarioError(f'{path}: lecture impossible ({exc.strerror})') from exc
    if path.suffix == '.json':
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f'{path}:{exc.lineno}: JSON invalide') from exc
        return dict(data.get('config', data))
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep or not key.strip():
            raise ScenarioError(f'{path}:{lineno}: ligne attendue "clé = valeur", reçu {raw!r}')
        values[key.strip().replace('-', '_')] = value.strip()
    return values


def load_config(preset=None, config_file=None, overrides=None):
    """
    Build a validated ``TrackerConfig``.

    Raises:
        django.core.exceptions.ValidationError: unknown preset or key, or a
            value outside its documented range.
    """
    from django.conf import settings
    from django.core.exceptions import ValidationError

    from .forms import TrackerConfigForm

    presets = settings.TRACKER_PRESETS
    preset = preset or settings.TRACKER_DEFAULT_PRESET
    if preset not in presets:
        raise ValidationError(
            f'Preset inconnu: {preset} (disponibles: {", ".join(sorted(presets))})',
            code='preset',
        )
    data = TrackerConfig().as_dict()
    data.update(presets[preset])
    data['preset'] = preset
    if config_file:
        file_values = read_key_value_file(config_file)
        unknown = sorted(set(file_values) - set(CONFIG_FIELDS))
        if unknown:
            raise ValidationError(f'Clés inconnues dans {config_file}: {", ".join(unknown)}', code='unknown')
        data.update(file_values)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})

    form = TrackerConfigForm(data)
    if not form.is_valid():
        raise ValidationError(form.errors.as_text())
    config = TrackerConfig(**form.cleaned_data)
    logger.debug('Configuration chargée: %s', config.as_dict())
    return config
