"""
Two-stage clustering association.

Stage 1 chains detections of adjacent frames inside fixed windows into
short tracklets ("lifted frames") by appearance. Stage 2 merges tracklets
across the whole sequence with UPGMA (average linkage) under an appearance
distance discounted by spatio-temporal coherence.
"""

import logging
import math
from dataclasses import dataclass
from itertools import groupby

import numpy as np
from scipy.optimize import linear_sum_assignment

from .appearance import AppearanceState, cosine_distance
from .config import TrackerConfig
from .geometry import BBox, spatial_distance, spatial_distance_array, spatial_modulation
from .motion import MotionState

logger = logging.getLogger(__name__)

INFEASIBLE = math.inf


@dataclass(frozen=True)
class Detection:
    """
    One detector output kept for tracking.

    ``det_index`` is the 0-based rank of the row within its frame in the
    detection file, ``source_index`` the row number in the whole file.
    """
    frame: int
    box: BBox
    confidence: float
    embedding: np.ndarray
    source_index: int = 0
    det_index: int = 0

    @property
    def key(self):
        return (self.frame, self.det_index)


@dataclass(frozen=True)
class Tracklet:
    id: int
    detections: tuple
    appearance: AppearanceState
    motion: MotionState

    @classmethod
    def build(cls, tracklet_id, detections, config):
        """
        Build a tracklet from detections, rebuilding motion and appearance.

        Detections are ordered by frame; two detections in the same frame
        are rejected.
        """
        detections = tuple(sorted(detections, key=lambda d: (d.frame, d.source_index)))
        frames = [d.frame for d in detections]
        if len(set(frames)) != len(frames):
            raise ValueError(f'Tracklet {tracklet_id}: plusieurs détections dans une même frame')
        appearance = AppearanceState.from_history(
            config.appearance_mode,
            [(d.frame, d.embedding, d.confidence) for d in detections],
            config.beta_f,
            config.rejection_threshold,
        )
        motion = MotionState.from_boxes(
            frames, [d.box for d in detections], config.n, config.freeze_size
        )
        return cls(tracklet_id, detections, appearance, motion)

    @property
    def start_frame(self):
        return self.detections[0].frame

    @property
    def end_frame(self):
        return self.detections[-1].frame

    @property
    def frames(self):
        return frozenset(d.frame for d in self.detections)

    def __len__(self):
        return len(self.detections)

    def overlaps(self, other):
        """
        True when both tracklets cannot be ordered in time.
        """
        if self.end_frame < other.start_frame or other.end_frame < self.start_frame:
            return False
        return True


def window_detections(detections, window_len):
    """
    Group detections into consecutive non-overlapping windows of frames.

    Frames are 1-based; window ``k`` covers frames
    ``[k * window_len + 1, (k + 1) * window_len]``. Empty windows are skipped.
    """
    ordered = sorted(detections, key=lambda d: (d.frame, d.det_index, d.source_index))
    return [
        list(group)
        for _, group in groupby(ordered, key=lambda d: (d.frame - 1) // window_len)
    ]


def form_lifted_frames(window, config, first_id=1):
    """
    Chain the detections of one window into tracklets.

    Detections of adjacent frames are matched one-to-one by minimum total
    cosine distance; pairs above ``config.stage1_gate`` are not linked.
    Chains never jump over a frame. Unmatched detections start new chains.
    """
    if not window:
        return []
    ordered = sorted(window, key=lambda d: (d.frame, d.det_index, d.source_index))
    chains = []
    open_chains = []
    previous_frame = None
    for frame, group in groupby(ordered, key=lambda d: d.frame):
        group = list(group)
        if previous_frame is None or frame != previous_frame + 1:
            open_chains = []
        matched = {}
        if open_chains:
            costs = np.array([
                [cosine_distance(chain[-1].embedding, det.embedding) for det in group]
                for chain in open_chains
            ])
            rows, cols = linear_sum_assignment(costs)
            for r, c in zip(rows, cols):
                if costs[r, c] <= config.stage1_gate:
                    matched[c] = open_chains[r]
        next_open = []
        for index, det in enumerate(group):
            chain = matched.get(index)
            if chain is None:
                chain = [det]
                chains.append(chain)
            else:
                chain.append(det)
            next_open.append(chain)
        open_chains = next_open
        previous_frame = frame
    return [Tracklet.build(first_id + k, chain, config) for k, chain in enumerate(chains)]


def _ordered(a, b):
    if a.end_frame < b.start_frame:
        return a, b
    return b, a


def spatial_factor(earlier, later, config):
    """
    lambda_C for ``earlier`` predicted forward to the first box of ``later``.
    """
    gap = later.start_frame - earlier.end_frame
    predicted = earlier.motion.predict(gap)
    d_sp = spatial_distance(predicted, later.detections[0].box, config.spatial_mode)
    return spatial_modulation(d_sp, config.off)


def tracklet_distance(a, b, config):
    """
    Appearance distance scaled by spatio-temporal coherence.

    Returns ``INFEASIBLE`` when the tracklets overlap in time. The earlier
    tracklet is always the one predicted forward, so the result does not
    depend on argument order.
    """
    if a.overlaps(b):
        return INFEASIBLE
    earlier, later = _ordered(a, b)
    appearance = cosine_distance(
        earlier.appearance.representation, later.appearance.representation
    )
    return spatial_factor(earlier, later, config) * appearance


def pairwise_distances(tracklets, config):
    """
    Symmetric matrix of ``tracklet_distance`` with ``inf`` for infeasible pairs.

    Each tracklet is predicted forward to all later tracklets at once.
    """
    n = len(tracklets)
    distances = np.full((n, n), INFEASIBLE)
    if n < 2:
        return distances
    reps = np.stack([t.appearance.representation for t in tracklets])
    appearance = np.clip(1.0 - reps @ reps.T, 0.0, 2.0)
    starts = np.array([t.start_frame for t in tracklets])
    ends = np.array([t.end_frame for t in tracklets])
    firsts = np.array([t.detections[0].box.as_tlwh() for t in tracklets])
    for i, earlier in enumerate(tracklets):
        later = np.flatnonzero(starts > ends[i])
        if not later.size:
            continue
        predicted = earlier.motion.predict_array(starts[later] - ends[i])
        d_sp = spatial_distance_array(predicted, firsts[later], config.spatial_mode)
        factor = np.minimum(1.0, d_sp / 2.0 + config.off)
        values = factor * appearance[i, later]
        distances[i, later] = values
        distances[later, i] = values
    return distances


@dataclass(frozen=True)
class MergeStep:
    left: int
    right: int
    distance: float
    size: int


def _row_minimum(d, k):
    # upper-triangle part only: pairs (k, j) with j > k
    row = d[k, k + 1:]
    if not row.size:
        return INFEASIBLE, -1
    j = int(np.argmin(row))
    return row[j], k + 1 + j


def upgma_clusters(distances, cutoff):
    """
    Average-linkage agglomeration on a precomputed distance matrix.

    ``inf`` marks an infeasible pair; a cluster pair with any infeasible
    member pair is itself infeasible. Merging stops when no feasible pair
    is closer than ``cutoff``. Ties go to the lowest index pair.

    Returns:
        (clusters, steps): member index lists sorted by their lowest
        index, and the executed merges in order.
    """
    d = np.array(distances, dtype=float, copy=True)
    n = d.shape[0]
    if n == 0:
        return [], []
    np.fill_diagonal(d, INFEASIBLE)
    sizes = np.ones(n, dtype=int)
    members = [[i] for i in range(n)]
    active = np.ones(n, dtype=bool)
    row_min = np.full(n, INFEASIBLE)
    row_arg = np.full(n, -1)
    for k in range(n):
        row_min[k], row_arg[k] = _row_minimum(d, k)
    steps = []
    while active.sum() > 1:
        i = int(np.argmin(row_min))
        j = int(row_arg[i])
        best = row_min[i]
        if not np.isfinite(best) or best >= cutoff:
            break
        # the mean over all member pairs; inf propagates
        merged = (sizes[i] * d[i] + sizes[j] * d[j]) / (sizes[i] + sizes[j])
        d[i, :] = merged
        d[:, i] = merged
        d[i, i] = INFEASIBLE
        d[j, :] = INFEASIBLE
        d[:, j] = INFEASIBLE
        sizes[i] += sizes[j]
        members[i].extend(members[j])
        members[j] = []
        active[j] = False
        row_min[j], row_arg[j] = INFEASIBLE, -1
        row_min[i], row_arg[i] = _row_minimum(d, i)
        for k in np.flatnonzero(active[:j]):
            if k == i:
                continue
            if row_arg[k] in (i, j):
                row_min[k], row_arg[k] = _row_minimum(d, k)
            elif k < i and (d[k, i] < row_min[k] or (d[k, i] == row_min[k] and i < row_arg[k])):
                row_min[k], row_arg[k] = d[k, i], i
        steps.append(MergeStep(i, j, float(best), int(sizes[i])))
        logger.debug('Fusion UPGMA %d + %d (distance %.4f, taille %d)', i, j, best, sizes[i])
    clusters = [sorted(members[i]) for i in range(n) if active[i]]
    return clusters, steps


def _renumber(groups, config):
    groups = sorted(
        groups, key=lambda dets: min((d.frame, d.source_index) for d in dets)
    )
    return [Tracklet.build(k, dets, config) for k, dets in enumerate(groups, start=1)]


def upgma_merge(tracklets, config):
    """
    Merge tracklets into final trajectories.

    Input tracklets are taken in id order. Merged clusters are rebuilt from
    their frame-ordered detections (the dynamic appearance replays the EMA
    over the whole history). Output ids are 1..K by start frame.
    """
    tracklets = sorted(tracklets, key=lambda t: t.id)
    distances = pairwise_distances(tracklets, config)
    clusters, steps = upgma_clusters(distances, config.merge_cutoff)
    logger.info('UPGMA: %d tracklets, %d fusions, %d trajectoires', len(tracklets), len(steps), len(clusters))
    groups = [
        [det for index in cluster for det in tracklets[index].detections]
        for cluster in clusters
    ]
    return _renumber(groups, config)


def track_sequence(detections, config=None):
    """
    Run both stages over one sequence.

    Every input detection ends up in exactly one output trajectory.
    """
    config = config or TrackerConfig()
    detections = list(detections)
    if not detections:
        return []
    tracklets = []
    for window in window_detections(detections, config.window_len):
        tracklets.extend(form_lifted_frames(window, config, first_id=len(tracklets) + 1))
    logger.info('Étape 1: %d détections -> %d tracklets', len(detections), len(tracklets))
    return upgma_merge(tracklets, config)
