"""
Seeded synthetic scenarios: ground truth, detections and embeddings.

Targets walk in horizontal lanes that never overlap, so a clean scenario
(no noise, no occlusion) is solvable exactly. Difficulty comes from box
noise, embedding noise and occlusion windows. A ``drop`` occlusion removes
the detections; a ``corrupt`` occlusion keeps them but blends the embedding
toward another identity and gives a confidence just above the detector
threshold. A ``partial`` occlusion lowers visibility along a triangular
profile (deepest mid-window); confidence falls by ``visibility_penalty``
per unit of hidden fraction and embedding noise grows with it, so the
deepest frames may drop under the detector threshold.
"""

import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import ScenarioError
from .mot_io import (
    EmbeddingTable, MotRow, join_detections, write_detections, write_embeddings, write_ground_truth,
)

logger = logging.getLogger(__name__)

MOTION_CHOICES = ('linear', 'sinusoidal')
OCCLUSION_MODES = ('drop', 'corrupt', 'partial')

BOX_WIDTH_RANGE = (20.0, 40.0)
ASPECT = 2.4
LANE_MARGIN = 10.0
CORRUPT_VISIBILITY = 0.5


class Occlusion(NamedTuple):
    target: int
    start: int
    end: int
    mode: str = 'drop'

    def covers(self, target, frame):
        return self.target == target and self.start <= frame <= self.end

    def visibility(self, frame, depth):
        """
        Visible fraction at ``frame`` for a partial occlusion, lowest (about
        ``1 - depth``) mid-window and rising linearly toward both ends.
        """
        u = (frame - self.start + 1) / (self.end - self.start + 2)
        return 1.0 - depth * (1.0 - abs(2.0 * u - 1.0))


def parse_occlusions(text):
    """
    Parse ``target:start-end:mode`` items separated by commas or semicolons.
    """
    occlusions = []
    for item in text.replace(';', ',').split(','):
        item = item.strip()
        if not item:
            continue
        parts = item.split(':')
        if len(parts) not in (2, 3):
            raise ValueError(f'Occlusion invalide: {item!r} (attendu cible:début-fin[:mode])')
        mode = parts[2].strip() if len(parts) == 3 else 'drop'
        if mode not in OCCLUSION_MODES:
            raise ValueError(f'Mode d\'occlusion inconnu: {mode!r}')
        try:
            target = int(parts[0])
            start, _, end = parts[1].partition('-')
            start, end = int(start), int(end or start)
        except ValueError as exc:
            raise ValueError(f'Occlusion invalide: {item!r}') from exc
        if end < start:
            raise ValueError(f'Occlusion à l\'envers: {item!r}')
        occlusions.append(Occlusion(target, start, end, mode))
    return tuple(occlusions)


def format_occlusions(occlusions):
    return ', '.join(f'{o.target}:{o.start}-{o.end}:{o.mode}' for o in occlusions)


@dataclass(frozen=True)
class Scenario:
    n_targets: int = 5
    n_frames: int = 100
    motion: str = 'linear'
    det_noise_px: float = 0.0
    embed_noise: float = 0.0
    occlusions: tuple = ()
    n_random_occlusions: int = 0
    occlusion_len: int = 8
    random_corrupt_ratio: float = 0.5
    random_partial_ratio: float = 0.0
    partial_depth: float = 0.8
    occluded_embed_noise: float = 0.5
    conf_base: float = 0.9
    conf_jitter: float = 0.02
    visibility_penalty: float = 0.5
    corrupt_blend: float = 0.6
    corrupt_margin: float = 0.02
    sigma: float = 0.7
    embed_dim: int = 128
    frame_width: float = 1920.0
    frame_height: float = 1080.0
    speed_max: float = 4.0
    amplitude: float = 15.0
    period: float = 40.0
    seed: int = 0

    def __post_init__(self):
        if self.motion not in MOTION_CHOICES:
            raise ScenarioError(f'Mouvement inconnu: {self.motion}')
        if self.det_noise_px < 0 or self.embed_noise < 0:
            raise ScenarioError('Les bruits doivent être positifs')
        if self.occluded_embed_noise < 0:
            raise ScenarioError('Les bruits doivent être positifs')
        if not 0.0 <= self.partial_depth < 1.0:
            raise ScenarioError(f'partial_depth hors de [0, 1): {self.partial_depth}')
        if self.random_corrupt_ratio + self.random_partial_ratio > 1.0:
            raise ScenarioError('random_corrupt_ratio + random_partial_ratio doit rester <= 1')
        for occlusion in self.occlusions:
            if not 1 <= occlusion.start <= occlusion.end <= self.n_frames:
                raise ScenarioError(f'Occlusion hors de [1, {self.n_frames}]: {occlusion}')
            if not 1 <= occlusion.target <= self.n_targets:
                raise ScenarioError(f'Cible d\'occlusion inconnue: {occlusion.target}')

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def lane_height(self):
        extra = 2 * self.amplitude if self.motion == 'sinusoidal' else 0.0
        return BOX_WIDTH_RANGE[1] * ASPECT + extra + LANE_MARGIN

    @property
    def capacity(self):
        return int(self.frame_height // self.lane_height)

    def as_dict(self):
        """
        Plain values, occlusions in their text form (what ``parse_scenario`` reads).
        """
        data = asdict(self)
        data['occlusions'] = format_occlusions(self.occlusions)
        return data

    def to_text(self):
        return ''.join(f'{key} = {value}\n' for key, value in self.as_dict().items())


SCENARIO_FIELDS = tuple(f.name for f in fields(Scenario))


def parse_scenario(values):
    """
    Validate a mapping of raw values (strings allowed) into a ``Scenario``.

    Missing keys take their defaults.
    """
    from .forms import ScenarioForm

    unknown = sorted(set(values) - set(SCENARIO_FIELDS))
    if unknown:
        raise ScenarioError(f'Clés de scénario inconnues: {", ".join(unknown)}')
    data = asdict(Scenario())
    data['occlusions'] = ''
    data.update(values)
    if not isinstance(data['occlusions'], str):
        data['occlusions'] = format_occlusions(data['occlusions'])
    form = ScenarioForm(data)
    if not form.is_valid():
        raise ScenarioError(form.errors.as_text())
    return Scenario(**form.cleaned_data)


def load_scenario(path, overrides=None):
    from .config import read_key_value_file

    values = read_key_value_file(path)
    values.update(overrides or {})
    return parse_scenario(values)


def prototypes(n, dim, rng):
    """
    ``n`` orthonormal identity prototypes of dimension ``max(dim, n)``.
    """
    dim = max(dim, n)
    q, _ = np.linalg.qr(rng.standard_normal((dim, n)))
    return q.T


@dataclass
class SyntheticTruth:
    scenario: Scenario
    gt_rows: list
    det_rows: list
    det_targets: list
    embeddings: EmbeddingTable

    def detections(self, sigma=None):
        """
        Tracker input, exactly as ``read_detections`` would build it from files.
        """
        sigma = self.scenario.sigma if sigma is None else sigma
        return join_detections(self.det_rows, self.embeddings, sigma)


def _reflect(value, low, high):
    # triangle wave keeps the box inside the frame
    span = high - low
    if span <= 0:
        return low
    value = (value - low) % (2 * span)
    return low + (value if value <= span else 2 * span - value)


def _visibility(boxes):
    """
    Visible fraction of each box, nearer boxes (lower bottom edge) in front.
    """
    result = []
    for k, (left, top, w, h) in enumerate(boxes):
        hidden = 0.0
        for j, (l2, t2, w2, h2) in enumerate(boxes):
            if j == k or t2 + h2 <= top + h:
                continue
            iw = min(left + w, l2 + w2) - max(left, l2)
            ih = min(top + h, t2 + h2) - max(top, t2)
            if iw > 0 and ih > 0:
                hidden += iw * ih
        area = w * h
        result.append(max(0.0, 1.0 - hidden / area) if area > 0 else 0.0)
    return result


def _random_occlusions(scenario, rng):
    occlusions = []
    length = min(scenario.occlusion_len, scenario.n_frames)
    for _ in range(scenario.n_random_occlusions):
        target = int(rng.integers(1, scenario.n_targets + 1))
        start = int(rng.integers(1, scenario.n_frames - length + 2))
        draw = rng.random()
        if draw < scenario.random_corrupt_ratio:
            mode = 'corrupt'
        elif draw < scenario.random_corrupt_ratio + scenario.random_partial_ratio:
            mode = 'partial'
        else:
            mode = 'drop'
        occlusions.append(Occlusion(target, start, start + length - 1, mode))
    return occlusions


def simulate(scenario):
    """
    Build ground truth, detections and embeddings in memory.

    Deterministic for a given scenario (seed included).

    Raises:
        ScenarioError: more targets than non-overlapping lanes.
    """
    if scenario.n_targets > scenario.capacity:
        raise ScenarioError(
            f'Scénario infaisable: {scenario.n_targets} cibles pour {scenario.capacity} couloirs'
        )
    rng = np.random.default_rng(scenario.seed)
    n = scenario.n_targets
    protos = prototypes(n, scenario.embed_dim, rng)
    dim = protos.shape[1]
    lanes = rng.permutation(scenario.capacity)[:n]
    widths = rng.uniform(*BOX_WIDTH_RANGE, size=n)
    heights = widths * ASPECT
    x0 = rng.uniform(0, scenario.frame_width - widths)
    vx = rng.uniform(-scenario.speed_max, scenario.speed_max, size=n)
    phases = rng.uniform(0, 2 * math.pi, size=n)
    extra = scenario.amplitude if scenario.motion == 'sinusoidal' else 0.0
    lane_tops = lanes * scenario.lane_height + LANE_MARGIN / 2 + extra
    occlusions = list(scenario.occlusions) + _random_occlusions(scenario, rng)

    gt_rows, det_rows, det_targets = [], [], []
    vectors = {}
    for frame in range(1, scenario.n_frames + 1):
        t = frame - 1
        boxes = []
        for k in range(n):
            left = _reflect(x0[k] + vx[k] * t, 0.0, scenario.frame_width - widths[k])
            top = lane_tops[k]
            if scenario.motion == 'sinusoidal':
                top += scenario.amplitude * math.sin(2 * math.pi * t / scenario.period + phases[k])
            boxes.append((left, top, widths[k], heights[k]))
        visibility = _visibility(boxes)

        emitted = []
        for k, box in enumerate(boxes):
            target = k + 1
            covering = [o for o in occlusions if o.covers(target, frame)]
            modes = {o.mode for o in covering}
            vis = visibility[k]
            for occlusion in covering:
                if occlusion.mode == 'partial':
                    vis = min(vis, occlusion.visibility(frame, scenario.partial_depth))
            if 'drop' in modes:
                vis = 0.0
            elif 'corrupt' in modes:
                vis = min(vis, CORRUPT_VISIBILITY)
            gt_rows.append(MotRow(frame, target, *box, conf=1.0, x=1.0, y=round(vis, 4)))
            if 'drop' in modes:
                continue
            left, top, w, h = box
            noise = rng.normal(0.0, scenario.det_noise_px, size=4) if scenario.det_noise_px else np.zeros(4)
            det_box = (left + noise[0], top + noise[1], max(w + noise[2], 1.0), max(h + noise[3], 1.0))
            spread = scenario.embed_noise
            if 'corrupt' not in modes:
                spread += scenario.occluded_embed_noise * (1.0 - vis)
            embedding = protos[k] + rng.normal(0.0, spread / math.sqrt(dim), size=dim)
            if 'corrupt' in modes:
                other = protos[(k + 1) % n] if n > 1 else rng.standard_normal(dim) / math.sqrt(dim)
                embedding = (1 - scenario.corrupt_blend) * embedding + scenario.corrupt_blend * other
                conf = scenario.sigma + rng.uniform(0.0, scenario.corrupt_margin)
            else:
                conf = scenario.conf_base - scenario.visibility_penalty * (1.0 - vis)
                conf += rng.normal(0.0, scenario.conf_jitter) if scenario.conf_jitter else 0.0
            conf = float(np.clip(conf, 0.0, 1.0))
            emitted.append((target, det_box, round(conf, 4), embedding / np.linalg.norm(embedding)))

        for rank, index in enumerate(rng.permutation(len(emitted))):
            target, det_box, conf, embedding = emitted[index]
            det_rows.append(MotRow(frame, -1, *det_box, conf=conf))
            det_targets.append(target)
            vectors[(frame, rank)] = embedding.astype(np.float32).astype(np.float64)

    logger.info(
        'Scénario seed=%d: %d lignes GT, %d détections, %d occlusions',
        scenario.seed, len(gt_rows), len(det_rows), len(occlusions),
    )
    return SyntheticTruth(scenario, gt_rows, det_rows, det_targets, EmbeddingTable(dim, vectors))


class SyntheticPaths(NamedTuple):
    root: Path
    gt: Path
    det: Path
    embeddings: Path
    scenario: Path


def generate(scenario, out_dir):
    """
    Write a scenario in MOT layout: ``gt/gt.txt``, ``det/det.txt``,
    ``det/det.emb`` and ``scenario.txt``.
    """
    root = Path(out_dir)
    truth = simulate(scenario)
    paths = SyntheticPaths(
        root,
        root / 'gt' / 'gt.txt',
        root / 'det' / 'det.txt',
        root / 'det' / 'det.emb',
        root / 'scenario.txt',
    )
    write_ground_truth(truth.gt_rows, paths.gt)
    write_detections(truth.det_rows, paths.det)
    write_embeddings(truth.embeddings, paths.embeddings)
    with open(paths.scenario, 'w', newline='\n', encoding='utf-8') as handle:
        handle.write(scenario.to_text())
    return paths
