"""
Exceptions raised by the tracking engine.

Management commands turn any of these into a ``CommandError``.
"""


class TrackingError(Exception):
    """
    Base class for every error raised by the tracking engine.
    """


class GeometryError(TrackingError, ValueError):
    """
    Invalid bounding box (negative size or non-finite coordinate).
    """


class AppearanceError(TrackingError, ValueError):
    """
    Corrupt or degenerate appearance embedding.
    """


class ScenarioError(TrackingError, ValueError):
    """
    Invalid synthetic scenario or key-value file.
    """


class MotFormatError(TrackingError, ValueError):
    """
    Malformed row in a MOT Challenge text file or embedding sidecar.
    """

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        if line is None:
            super().__init__(f'{self.path}: {message}')
        else:
            super().__init__(f'{self.path}:{line}: {message}')


class MissingEmbeddingError(TrackingError, KeyError):
    """
    A kept detection has no row in the embedding sidecar.
    """

    def __init__(self, path, frame, index):
        self.path = str(path)
        self.frame = frame
        self.index = index
        super().__init__(
            f'{self.path}: pas d\'embedding pour la détection (frame={frame}, index={index})'
        )

    def __str__(self):
        return self.args[0]


class MotIOError(TrackingError, OSError):
    """
    Reading or writing a file failed; carries the offending path.
    """

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f'{self.path}: {reason}')
