"""
Average constant velocity motion model.

Velocity is the displacement over the last N frames divided by the
elapsed frame count, applied independently to box centre and size.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import BBox

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 9


class Observation(NamedTuple):
    frame: int
    box: BBox

    @property
    def cx(self):
        return self.box.center[0]

    @property
    def cy(self):
        return self.box.center[1]


class Velocity(NamedTuple):
    vx: float
    vy: float
    vw: float
    vh: float
    reliable: bool = True


ZERO_VELOCITY = Velocity(0.0, 0.0, 0.0, 0.0, False)


@dataclass(frozen=True)
class MotionState:
    """
    Frame-ordered observations of one tracklet plus the averaging window N.
    """
    observations: tuple
    window: int = DEFAULT_WINDOW
    freeze_size: bool = False

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f'La fenêtre de vitesse doit être >= 2, reçu {self.window}')
        if not self.observations:
            raise ValueError('MotionState sans observation')
        frames = [obs.frame for obs in self.observations]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f'Frames non strictement croissantes: {frames}')

    @classmethod
    def from_boxes(cls, frames, boxes, window=DEFAULT_WINDOW, freeze_size=False):
        observations = tuple(Observation(int(f), b) for f, b in zip(frames, boxes))
        return cls(observations, window, freeze_size)

    @property
    def first(self):
        return self.observations[0]

    @property
    def last(self):
        return self.observations[-1]

    def _reference(self):
        """
        Observation the velocity is measured from.
        """
        if self.window == 2:
            # two-frame estimate: difference of the last two observations
            return self.observations[-2]
        target = self.last.frame - self.window
        if self.first.frame >= target:
            return self.first
        # closest to t - N; on a tie, the older observation
        return min(self.observations[:-1], key=lambda obs: (abs(obs.frame - target), obs.frame))

    def velocity(self):
        """
        Per-frame rates (vx, vy, vw, vh).

        Uses the observation N frames back, or the whole trajectory when it
        is shorter than N. The rate is always divided by the true number of
        elapsed frames, so gaps keep their meaning. A single observation
        gives a zero velocity flagged unreliable.
        """
        if len(self.observations) < 2:
            return ZERO_VELOCITY
        ref = self._reference()
        last = self.last
        elapsed = last.frame - ref.frame
        return Velocity(
            (last.cx - ref.cx) / elapsed,
            (last.cy - ref.cy) / elapsed,
            (last.box.width - ref.box.width) / elapsed,
            (last.box.height - ref.box.height) / elapsed,
        )

    def predict(self, p):
        """
        Box extrapolated ``p`` frames from the last observation.

        ``p`` may be negative to extrapolate backwards. Sizes never go
        below zero; with ``freeze_size`` only the centre moves.
        """
        last = self.last
        if p == 0:
            return last.box
        v = self.velocity()
        width, height = last.box.width, last.box.height
        if not self.freeze_size:
            width = max(width + v.vw * p, 0.0)
            height = max(height + v.vh * p, 0.0)
        return BBox.from_center(last.cx + v.vx * p, last.cy + v.vy * p, width, height)

    def predict_array(self, p):
        """
        ``predict`` for an array of offsets, as ``(..., 4)`` tlwh rows.
        """
        p = np.asarray(p, dtype=float)
        last = self.last
        v = self.velocity()
        width = np.full_like(p, last.box.width)
        height = np.full_like(p, last.box.height)
        if not self.freeze_size:
            width = np.maximum(width + v.vw * p, 0.0)
            height = np.maximum(height + v.vh * p, 0.0)
        cx = last.cx + v.vx * p
        cy = last.cy + v.vy * p
        boxes = np.stack([cx - width / 2.0, cy - height / 2.0, width, height], axis=-1)
        return np.where((p == 0)[..., None], np.asarray(last.box.as_tlwh()), boxes)


def average_velocity(state):
    return state.velocity()


def predict(state, p):
    return state.predict(p)
