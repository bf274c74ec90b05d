"""
Appearance embeddings and tracklet-level appearance representations.

A tracklet is represented either by a confidence-weighted exponential
moving average of its detection embeddings (``dynamic``), or by one of the
history-based alternatives: the middle element (``median``), the most
confident element (``max``) or the renormalized mean (``mean``).
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import AppearanceError

logger = logging.getLogger(__name__)

NORM_EPS = 1e-12


class AppearanceMode(str, Enum):
    DYNAMIC = 'dynamic'
    MEDIAN = 'median'
    MAX = 'max'
    MEAN = 'mean'


class HistoryEntry(NamedTuple):
    frame: int
    embedding: np.ndarray
    confidence: float


def normalize(vector):
    """
    Return ``vector`` scaled to unit L2 norm.

    Zero or non-finite vectors are never normalized: they raise
    ``AppearanceError``.
    """
    vector = np.asarray(vector, dtype=np.float64)
    if not np.all(np.isfinite(vector)):
        raise AppearanceError('Embedding contenant des valeurs non finies')
    norm = np.linalg.norm(vector)
    if norm < NORM_EPS:
        raise AppearanceError('Embedding de norme nulle')
    return vector / norm


def cosine_distance(a, b):
    """
    1 - cos(a, b), in [0, 2].
    """
    a = normalize(a)
    b = normalize(b)
    return float(np.clip(1.0 - np.dot(a, b), 0.0, 2.0))


def adaptive_beta(s_det, sigma, beta_f):
    """
    Confidence-adaptive EMA weight on the previous embedding.

    Returns ``None`` when ``s_det < sigma``: the detection is considered
    noisy and must not take part in the update.
    """
    if not sigma < 1:
        raise ValueError(f'sigma doit être < 1, reçu {sigma}')
    if s_det < sigma:
        return None
    trust = (s_det - sigma) / (1.0 - sigma)
    return beta_f + (1.0 - beta_f) * (1.0 - trust)


@dataclass(frozen=True)
class AppearanceState:
    """
    Appearance of one tracklet.

    ``current`` is the maintained EMA in dynamic mode. The other modes keep
    the full per-detection ``history`` and derive ``current`` from it.
    """
    mode: AppearanceMode = AppearanceMode.DYNAMIC
    current: Optional[np.ndarray] = None
    history: tuple = field(default_factory=tuple)

    @classmethod
    def from_history(cls, mode, history, beta_f, sigma):
        """
        Build the state of a whole frame-ordered history in one pass.
        """
        mode = AppearanceMode(mode)
        history = tuple(HistoryEntry(f, normalize(e), float(c)) for f, e, c in history)
        current = representative(history, mode, beta_f, sigma)
        if mode is AppearanceMode.DYNAMIC:
            return cls(mode, current)
        return cls(mode, current, history)

    def observe(self, frame, embedding, confidence, beta_f, sigma):
        """
        Add one detection and return the new state.
        """
        if self.mode is AppearanceMode.DYNAMIC:
            return ema_update(self, embedding, confidence, beta_f, sigma)
        history = self.history + (HistoryEntry(frame, normalize(embedding), float(confidence)),)
        return replace(self, history=history, current=representative(history, self.mode))

    @property
    def representation(self):
        if self.current is None:
            raise AppearanceError('Aucune apparence observée pour ce tracklet')
        return self.current


def ema_update(state, e_new, s_det, beta_f, sigma):
    """
    One confidence-weighted EMA step, renormalized to unit length.

    The first observation initialises the state. Later detections under
    ``sigma`` leave the state unchanged.
    """
    e_new = normalize(e_new)
    if state.current is None:
        return replace(state, current=e_new)
    beta = adaptive_beta(s_det, sigma, beta_f)
    if beta is None:
        logger.debug('Détection rejetée pour l\'EMA (s_det=%.3f < sigma=%.3f)', s_det, sigma)
        return state
    blended = beta * state.current + (1.0 - beta) * e_new
    return replace(state, current=normalize(blended))


def replay_ema(history, beta_f, sigma):
    state = AppearanceState(AppearanceMode.DYNAMIC)
    for entry in history:
        state = ema_update(state, entry.embedding, entry.confidence, beta_f, sigma)
    return state.representation


def _median_entry(history):
    # middle frame in absolute indices, then the closest element present
    target = (history[0].frame + history[-1].frame) // 2
    return min(history, key=lambda entry: (abs(entry.frame - target), entry.frame))


def representative(history, mode, beta_f=0.822, sigma=0.7):
    """
    Embedding representing a frame-ordered tracklet history.

    Args:
        history: sequence of ``HistoryEntry`` (or ``(frame, embedding, confidence)``).
        mode: one of ``AppearanceMode``.
        beta_f, sigma: EMA parameters, only used by the dynamic mode.

    Raises:
        AppearanceError: empty history, or a mean that cancels out.
    """
    mode = AppearanceMode(mode)
    history = [HistoryEntry(*entry) for entry in history]
    if not history:
        raise AppearanceError('Historique d\'apparence vide')
    if mode is AppearanceMode.DYNAMIC:
        return replay_ema(history, beta_f, sigma)
    if mode is AppearanceMode.MEDIAN:
        return normalize(_median_entry(history).embedding)
    if mode is AppearanceMode.MAX:
        # max() keeps the first maximum, so ties go to the earliest detection
        best = max(history, key=lambda entry: entry.confidence)
        return normalize(best.embedding)
    mean = np.mean([normalize(entry.embedding) for entry in history], axis=0)
    if np.linalg.norm(mean) < 1e-9:
        raise AppearanceError('Moyenne d\'apparence nulle (embeddings opposés)')
    return normalize(mean)
