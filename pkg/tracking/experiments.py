"""
Ablation sweeps: one tracking + evaluation run per grid point and seed.

By default grid points vary one parameter at a time around a base
configuration, as in an ablation table; ``grid_points`` also builds
cartesian products and cumulative steps. Results are a long-format frame
with one row per (point, seed, metric).
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import NamedTuple

import pandas as pd

from .association import track_sequence
from .mot_io import read_detections, read_ground_truth, trajectory_rows
from .metrics import evaluate
from .synthgen import simulate

logger = logging.getLogger(__name__)

SWEEP_METRICS = ('MOTA', 'IDF1', 'IDP', 'IDR', 'Recall', 'Precision', 'FP', 'FN', 'IDSW')
CSV_COLUMNS = ['point', 'param', 'value', 'seed', 'metric', 'score', 'error']
GRID_MODES = ('single', 'product', 'steps')
BASE_POINT = 'base'


def _to_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ('1', 'true', 'yes', 'oui', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'non', 'off'):
        return False
    raise ValueError(f'Booléen invalide: {text!r}')


SWEEPABLE = {
    'n': int,
    'window_len': int,
    'beta_f': float,
    'off': float,
    'sigma': float,
    'ema_sigma': float,
    'merge_cutoff': float,
    'stage1_gate': float,
    'appearance_mode': str,
    'spatial_mode': str,
    'freeze_size': _to_bool,
}
ALIASES = {
    'window': 'window_len',
    'appearance': 'appearance_mode',
    'spatial': 'spatial_mode',
}


class GridPoint(NamedTuple):
    index: int
    param: str
    value: object
    # (field, value) pairs applied to the base configuration
    changes: tuple = ()


def _expand_values(text):
    values = []
    for item in str(text).split(','):
        item = item.strip()
        if not item:
            continue
        low, sep, high = item.partition('..')
        if sep:
            values.extend(str(v) for v in range(int(low), int(high) + 1))
        else:
            values.append(item)
    return values


def parse_grid(spec):
    """
    Grid from a mapping ``{param: "v1,v2,..."}``.

    Integer ranges may be written ``2..14``. Parameter aliases (``window``,
    ``appearance``, ``spatial``) are accepted.
    """
    grid = {}
    for raw_name, raw_values in spec.items():
        name = ALIASES.get(raw_name.strip().replace('-', '_'), raw_name.strip().replace('-', '_'))
        if name not in SWEEPABLE:
            raise ValueError(f'Paramètre non balayable: {raw_name}')
        if isinstance(raw_values, str):
            raw_values = _expand_values(raw_values)
        grid[name] = [SWEEPABLE[name](v) for v in raw_values]
        if not grid[name]:
            raise ValueError(f'Aucune valeur pour {raw_name}')
    return grid


def parse_grid_items(items):
    """
    Grid from ``param=v1,v2`` strings (repeated command-line options).
    """
    spec = {}
    for item in items:
        name, sep, values = item.partition('=')
        if not sep:
            raise ValueError(f'Grille invalide: {item!r} (attendu param=v1,v2)')
        spec[name] = values
    return parse_grid(spec)


def parse_seeds(text):
    """
    Seeds from ``"0..19"``, ``"0-19"`` or ``"1,4,7"``.
    """
    text = str(text).strip()
    if '-' in text and ',' not in text and not text.startswith('-'):
        text = text.replace('-', '..')
    seeds = [int(v) for v in _expand_values(text)]
    if not seeds:
        raise ValueError('Aucune graine')
    return seeds


def grid_points(grid, mode='single'):
    """
    Points of ``grid`` in a stable order.

    ``single`` changes one parameter per point. ``product`` takes every
    combination; its ``param`` and ``value`` columns join the names and
    values with ``;``. ``steps`` starts from the unchanged base, then each
    value in grid order is added on top of the previous point.
    """
    if mode not in GRID_MODES:
        raise ValueError(f'Mode de grille inconnu: {mode!r} (attendu {", ".join(GRID_MODES)})')
    points = []
    if mode == 'single':
        for param, values in grid.items():
            for value in values:
                points.append(GridPoint(len(points), param, value, ((param, value),)))
    elif mode == 'product':
        names = list(grid)
        for combo in product(*(grid[name] for name in names)):
            changes = tuple(zip(names, combo))
            points.append(GridPoint(
                len(points), ';'.join(names), ';'.join(str(v) for v in combo), changes,
            ))
    else:
        points.append(GridPoint(0, BASE_POINT, BASE_POINT, ()))
        current = {}
        for param, values in grid.items():
            for value in values:
                current[param] = value
                points.append(GridPoint(len(points), param, value, tuple(current.items())))
    return points


def point_config(base_config, point):
    return base_config.replace(**dict(point.changes))


@dataclass(frozen=True)
class SyntheticSource:
    """
    One synthetic sequence per seed, generated in memory.
    """
    scenario: object

    def sequences(self, seed, sigma):
        truth = simulate(self.scenario.replace(seed=seed))
        yield f'synth-{seed}', truth.gt_rows, truth.detections(sigma)


@dataclass(frozen=True)
class DatasetSource:
    """
    Sequences on disk in MOT layout: ``<seq>/det/det.txt`` (+ ``det.emb``)
    and ``<seq>/gt/gt.txt``. The seed is ignored.
    """
    root: str

    def sequence_dirs(self):
        root = Path(self.root)
        dirs = sorted(p for p in root.iterdir() if (p / 'det' / 'det.txt').is_file())
        if (root / 'det' / 'det.txt').is_file():
            dirs.insert(0, root)
        return dirs

    def sequences(self, seed, sigma):
        for seq in self.sequence_dirs():
            gt = read_ground_truth(seq / 'gt' / 'gt.txt')
            yield seq.name, gt, read_detections(seq / 'det' / 'det.txt', sigma)


def run_point(source, base_config, point, seed):
    """
    Track and evaluate every sequence of ``source`` for one grid point.

    Failures are captured as a single ``error`` row so the sweep goes on.
    """
    base = {'point': point.index, 'param': point.param, 'value': str(point.value), 'seed': seed}
    try:
        config = point_config(base_config, point)
        pairs = []
        for name, gt, detections in source.sequences(seed, config.sigma):
            trajectories = track_sequence(detections, config)
            pairs.append((name, gt, trajectory_rows(trajectories)))
        aggregate = evaluate(pairs).aggregate.as_row()
    except Exception as exc:
        logger.warning('Point %d (%s=%s, seed %d) en échec: %s', point.index, point.param, point.value, seed, exc)
        return [dict(base, metric='error', score=math.nan, error=str(exc))]
    return [dict(base, metric=m, score=float(aggregate[m]), error='') for m in SWEEP_METRICS]


def _run_task(task):
    return run_point(*task)


def run_sweep(source, base_config, grid, seeds=(0,), jobs=1, mode='single'):
    """
    Run the whole grid and return the long-format results.

    ``mode`` is passed to ``grid_points``.

    Row order only depends on the grid and the seeds, whatever ``jobs``.
    """
    tasks = [(source, base_config, point, seed) for point in grid_points(grid, mode) for seed in seeds]
    logger.info('Balayage: %d runs (%d processus)', len(tasks), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = [_run_task(task) for task in tasks]
    rows = [row for chunk in chunks for row in chunk]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def summarize(results):
    """
    Mean and standard deviation over seeds for each point and metric.
    """
    scored = results[results['metric'] != 'error']
    summary = (
        scored.groupby(['point', 'param', 'value', 'metric'], sort=True)['score']
        .agg(['mean', 'std', 'count'])
        .reset_index()
    )
    summary['std'] = summary['std'].fillna(0.0)
    return summary
