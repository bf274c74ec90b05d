from django import forms

from .appearance import AppearanceMode
from .geometry import SpatialMode
from .synthgen import MOTION_CHOICES, parse_occlusions


class TrackerConfigForm(forms.Form):
    """
    Validation of merged tracker settings (preset, file, flags).
    """
    window_len = forms.IntegerField(min_value=1, label='Longueur de fenêtre')
    sigma = forms.FloatField(min_value=0.0, max_value=0.999, label='Seuil détecteur')
    ema_sigma = forms.FloatField(required=False, min_value=0.0, max_value=0.999, label='Seuil EMA')
    beta_f = forms.FloatField(min_value=0.0, max_value=1.0)
    off = forms.FloatField(min_value=0.0, max_value=1.0)
    n = forms.IntegerField(min_value=2, label='Fenêtre de vitesse')
    appearance_mode = forms.ChoiceField(choices=[(m.value, m.value) for m in AppearanceMode])
    spatial_mode = forms.ChoiceField(choices=[(m.value, m.value) for m in SpatialMode])
    merge_cutoff = forms.FloatField(min_value=0.0, max_value=2.0)
    stage1_gate = forms.FloatField(min_value=0.0, max_value=2.0)
    freeze_size = forms.BooleanField(required=False)
    preset = forms.CharField(max_length=40)


class ScenarioForm(forms.Form):
    """
    Validation of a synthetic scenario description.
    """
    n_targets = forms.IntegerField(min_value=1, max_value=500)
    n_frames = forms.IntegerField(min_value=1)
    motion = forms.ChoiceField(choices=[(m, m) for m in MOTION_CHOICES])
    det_noise_px = forms.FloatField(min_value=0.0)
    embed_noise = forms.FloatField(min_value=0.0)
    occlusions = forms.CharField(required=False, empty_value='')
    n_random_occlusions = forms.IntegerField(min_value=0)
    occlusion_len = forms.IntegerField(min_value=1)
    random_corrupt_ratio = forms.FloatField(min_value=0.0, max_value=1.0)
    random_partial_ratio = forms.FloatField(min_value=0.0, max_value=1.0)
    partial_depth = forms.FloatField(min_value=0.0, max_value=0.99)
    occluded_embed_noise = forms.FloatField(min_value=0.0)
    conf_base = forms.FloatField(min_value=0.0, max_value=1.0)
    conf_jitter = forms.FloatField(min_value=0.0)
    visibility_penalty = forms.FloatField(min_value=0.0, max_value=1.0)
    corrupt_blend = forms.FloatField(min_value=0.0, max_value=1.0)
    corrupt_margin = forms.FloatField(min_value=0.0, max_value=0.3)
    sigma = forms.FloatField(min_value=0.0, max_value=0.999)
    embed_dim = forms.IntegerField(min_value=2)
    frame_width = forms.FloatField(min_value=1.0)
    frame_height = forms.FloatField(min_value=1.0)
    speed_max = forms.FloatField(min_value=0.0)
    amplitude = forms.FloatField(min_value=0.0)
    period = forms.FloatField(min_value=1.0)
    seed = forms.IntegerField(min_value=0)

    def clean_occlusions(self):
        """
        Parse ``target:start-end:mode`` items separated by commas.
        """
        try:
            return parse_occlusions(self.cleaned_data['occlusions'])
        except ValueError as exc:
            raise forms.ValidationError(str(exc))

    def clean(self):
        cleaned = super().clean()
        n_targets = cleaned.get('n_targets')
        n_frames = cleaned.get('n_frames')
        for occlusion in cleaned.get('occlusions') or ():
            if n_targets is not None and not 1 <= occlusion.target <= n_targets:
                self.add_error('occlusions', f'Cible hors limites: {occlusion.target}')
            if n_frames is not None and not 1 <= occlusion.start <= occlusion.end <= n_frames:
                self.add_error('occlusions', f'Fenêtre hors de [1, {n_frames}]: {occlusion.start}-{occlusion.end}')
        corrupt, partial = cleaned.get('random_corrupt_ratio'), cleaned.get('random_partial_ratio')
        if corrupt is not None and partial is not None and corrupt + partial > 1.0:
            self.add_error('random_partial_ratio', 'random_corrupt_ratio + random_partial_ratio dépasse 1')
        return cleaned
