"""
CLEAR-MOT and identity (IDF1) metrics against MOT ground truth.

Matching uses plain IoU, as the benchmarks define it. HOTA, DetA and AssA
are not computed here; use the official external evaluator for those.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

from .geometry import iou

logger = logging.getLogger(__name__)

AGGREGATE = 'AGGREGATE'
HOTA_NOTE = (
    'HOTA/DetA/AssA non calculés: utiliser l\'évaluateur officiel (TrackEval) '
    'pour comparer aux classements publiés.'
)
COLUMNS = [
    'MOTA', 'IDF1', 'IDP', 'IDR', 'Recall', 'Precision',
    'FP', 'FN', 'IDSW', 'GT', 'Matches', 'Predictions',
]


def _ratio(num, den):
    # nothing to get wrong counts as perfect
    return num / den if den else 1.0


def _by_frame(rows):
    frames = defaultdict(list)
    for row in rows:
        frames[row.frame].append(row)
    return frames


def _iou_matrix(gts, hyps):
    return np.array([[iou(g.box, h.box) for h in hyps] for g in gts]).reshape(len(gts), len(hyps))


@dataclass
class ClearCounts:
    gt: int = 0
    predictions: int = 0
    matches: int = 0
    fp: int = 0
    fn: int = 0
    idsw: int = 0

    @property
    def mota(self):
        errors = self.fp + self.fn + self.idsw
        if not self.gt:
            return 1.0 if errors == 0 else 0.0
        return 1.0 - errors / self.gt

    @property
    def recall(self):
        return _ratio(self.matches, self.gt)

    @property
    def precision(self):
        return _ratio(self.matches, self.matches + self.fp)

    def __add__(self, other):
        return ClearCounts(
            self.gt + other.gt, self.predictions + other.predictions, self.matches + other.matches,
            self.fp + other.fp, self.fn + other.fn, self.idsw + other.idsw,
        )


@dataclass
class IdentityCounts:
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0

    @property
    def idf1(self):
        return _ratio(2 * self.idtp, 2 * self.idtp + self.idfp + self.idfn)

    @property
    def idp(self):
        return _ratio(self.idtp, self.idtp + self.idfp)

    @property
    def idr(self):
        return _ratio(self.idtp, self.idtp + self.idfn)

    def __add__(self, other):
        return IdentityCounts(self.idtp + other.idtp, self.idfp + other.idfp, self.idfn + other.idfn)


def clear_mot(gt, results, iou_threshold=0.5):
    """
    CLEAR-MOT counts over one sequence.

    Per frame, pairs matched in the previous frames are kept first when
    their IoU still reaches the threshold; the rest is matched by an optimal
    one-to-one assignment on IoU. A ground-truth id matched to a different
    prediction id than its last match is an identity switch.
    """
    if not 0 < iou_threshold < 1:
        raise ValueError(f'Seuil IoU hors de (0, 1): {iou_threshold}')
    gt_frames = _by_frame(gt)
    hyp_frames = _by_frame(results)
    counts = ClearCounts()
    last_match = {}
    for frame in sorted(set(gt_frames) | set(hyp_frames)):
        gts = gt_frames.get(frame, [])
        hyps = hyp_frames.get(frame, [])
        overlaps = _iou_matrix(gts, hyps)
        pairs = {}
        used = set()
        for gi, g in enumerate(gts):
            previous = last_match.get(g.id)
            if previous is None:
                continue
            for hi, h in enumerate(hyps):
                if h.id == previous and hi not in used and overlaps[gi, hi] >= iou_threshold:
                    pairs[gi] = hi
                    used.add(hi)
                    break
        free_g = [gi for gi in range(len(gts)) if gi not in pairs]
        free_h = [hi for hi in range(len(hyps)) if hi not in used]
        if free_g and free_h:
            sub = overlaps[np.ix_(free_g, free_h)]
            cost = np.where(sub >= iou_threshold, 1.0 - sub, 1e6)
            for r, c in zip(*linear_sum_assignment(cost)):
                if sub[r, c] >= iou_threshold:
                    gi, hi = free_g[r], free_h[c]
                    pairs[gi] = hi
                    g_id, h_id = gts[gi].id, hyps[hi].id
                    if g_id in last_match and last_match[g_id] != h_id:
                        counts.idsw += 1
        for gi, hi in pairs.items():
            last_match[gts[gi].id] = hyps[hi].id
        counts.gt += len(gts)
        counts.predictions += len(hyps)
        counts.matches += len(pairs)
        counts.fp += len(hyps) - len(pairs)
        counts.fn += len(gts) - len(pairs)
    return counts


def identity_overlap(gt, results, iou_threshold=0.5):
    """
    Frames where each (gt id, predicted id) pair overlaps above threshold.

    Returns:
        (gt_ids, hyp_ids, counts, gt_lengths, hyp_lengths)
    """
    gt_ids = sorted({row.id for row in gt})
    hyp_ids = sorted({row.id for row in results})
    g_index = {ident: k for k, ident in enumerate(gt_ids)}
    h_index = {ident: k for k, ident in enumerate(hyp_ids)}
    counts = np.zeros((len(gt_ids), len(hyp_ids)), dtype=int)
    gt_frames = _by_frame(gt)
    hyp_frames = _by_frame(results)
    for frame in set(gt_frames) & set(hyp_frames):
        gts, hyps = gt_frames[frame], hyp_frames[frame]
        overlaps = _iou_matrix(gts, hyps)
        for gi, hi in zip(*np.nonzero(overlaps >= iou_threshold)):
            counts[g_index[gts[gi].id], h_index[hyps[hi].id]] += 1
    gt_lengths = np.bincount([g_index[row.id] for row in gt], minlength=len(gt_ids))
    hyp_lengths = np.bincount([h_index[row.id] for row in results], minlength=len(hyp_ids))
    return gt_ids, hyp_ids, counts, gt_lengths, hyp_lengths


def idf1(gt, results, iou_threshold=0.5):
    """
    Identity counts from the optimal global one-to-one id assignment.

    Minimising missed plus false frames over the assignment is the same as
    maximising the frames where assigned ids overlap.
    """
    _, _, counts, gt_lengths, hyp_lengths = identity_overlap(gt, results, iou_threshold)
    idtp = 0
    if counts.size:
        rows, cols = linear_sum_assignment(counts, maximize=True)
        idtp = int(counts[rows, cols].sum())
    return IdentityCounts(
        idtp=idtp,
        idfp=int(hyp_lengths.sum()) - idtp,
        idfn=int(gt_lengths.sum()) - idtp,
    )


@dataclass
class SequenceMetrics:
    name: str
    clear: ClearCounts = field(default_factory=ClearCounts)
    identity: IdentityCounts = field(default_factory=IdentityCounts)

    def as_row(self):
        c, i = self.clear, self.identity
        return {
            'MOTA': c.mota, 'IDF1': i.idf1, 'IDP': i.idp, 'IDR': i.idr,
            'Recall': c.recall, 'Precision': c.precision,
            'FP': c.fp, 'FN': c.fn, 'IDSW': c.idsw, 'GT': c.gt,
            'Matches': c.matches, 'Predictions': c.predictions,
        }


def evaluate_sequence(name, gt, results, iou_threshold=0.5):
    metrics = SequenceMetrics(
        name,
        clear_mot(gt, results, iou_threshold),
        idf1(gt, results, iou_threshold),
    )
    logger.info(
        '%s: MOTA=%.4f IDF1=%.4f IDSW=%d', name, metrics.clear.mota, metrics.identity.idf1, metrics.clear.idsw
    )
    return metrics


@dataclass
class EvalReport:
    """
    Per-sequence metrics plus an aggregate (counts summed, ratios recomputed).
    """
    sequences: list = field(default_factory=list)

    @property
    def aggregate(self):
        total = SequenceMetrics(AGGREGATE)
        for seq in self.sequences:
            total.clear = total.clear + seq.clear
            total.identity = total.identity + seq.identity
        return total

    def to_frame(self):
        rows = [seq.as_row() for seq in self.sequences] + [self.aggregate.as_row()]
        names = [seq.name for seq in self.sequences] + [AGGREGATE]
        frame = pd.DataFrame(rows, index=pd.Index(names, name='sequence'), columns=COLUMNS)
        return frame

    def to_text(self):
        text = self.to_frame().to_string(float_format=lambda v: f'{v:.4f}')
        return f'{text}\n\n{HOTA_NOTE}'

    def to_csv(self, path):
        self.to_frame().to_csv(path, float_format='%.6f', lineterminator='\n')


def evaluate(pairs, iou_threshold=0.5):
    """
    Evaluate several sequences given as ``(name, gt_rows, result_rows)``.
    """
    return EvalReport([evaluate_sequence(name, gt, res, iou_threshold) for name, gt, res in pairs])
