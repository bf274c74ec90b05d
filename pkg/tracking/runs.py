"""
Run ledger: every command leaves a manifest next to its output and, when
``TRACKING_RECORD_RUNS`` is on, a ``TrackingRun`` row in the database.
"""

import json
import logging
import platform
import sys
import time
from pathlib import Path

import django
import numpy as np
import pandas as pd
import scipy
from django.conf import settings

from . import __version__
from .models import SequenceEvaluation, TrackingRun

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = '.manifest.json'


def manifest_path_for(output, kind=None):
    """
    ``results.txt`` -> ``results.txt.manifest.json``, ``out/`` -> ``out.manifest.json``.

    With ``kind``, the run kind goes before the suffix:
    ``results.txt.eval.manifest.json``, distinct from the manifest of the
    command that wrote ``results.txt``.
    """
    output = Path(output)
    infix = f'.{kind}' if kind else ''
    return output.with_name(output.name + infix + MANIFEST_SUFFIX)


def library_versions():
    return {
        'tracking': __version__,
        'python': platform.python_version(),
        'django': django.get_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
    }


def read_manifest(path):
    with open(path, encoding='utf-8') as handle:
        return json.load(handle)


class RunRecorder:
    """
    Context manager around one command execution.

    On success the manifest is written to ``manifest_path`` and the run is
    marked done; on error the run is marked failed and the exception goes on.
    """

    def __init__(self, kind, config=None, inputs=None, seed=None, argv=None, manifest_path=None):
        self.kind = kind
        self.config = dict(config or {})
        self.inputs = {k: str(v) if isinstance(v, Path) else v for k, v in (inputs or {}).items()}
        self.outputs = {}
        self.seed = seed
        self.argv = ' '.join(argv if argv is not None else sys.argv)
        self.manifest_path = Path(manifest_path) if manifest_path else None
        self.summary = None
        self.run = None
        self.wall_time = None
        self._started = None

    def __enter__(self):
        self._started = time.perf_counter()
        if getattr(settings, 'TRACKING_RECORD_RUNS', False):
            self.run = TrackingRun.objects.create(
                kind=self.kind,
                config=self.config,
                inputs=self.inputs,
                versions=library_versions(),
                seed=self.seed,
                argv=self.argv,
            )
        return self

    def add_output(self, name, path):
        self.outputs[name] = str(path)

    def record_report(self, report):
        """
        Keep the metrics of an ``EvalReport`` with the run.
        """
        rows = [(seq.name, seq.as_row()) for seq in report.sequences]
        aggregate = report.aggregate
        rows.append((aggregate.name, aggregate.as_row()))
        self.summary = {name: row for name, row in rows}
        if self.run is not None:
            SequenceEvaluation.objects.bulk_create(
                [SequenceEvaluation.from_row(self.run, name, row) for name, row in rows]
            )

    def manifest(self):
        return {
            'run_id': self.run.pk if self.run else None,
            'kind': self.kind,
            'config': self.config,
            'inputs': self.inputs,
            'outputs': self.outputs,
            'versions': library_versions(),
            'seed': self.seed,
            'argv': self.argv,
            'wall_time': self.wall_time,
            'metrics': self.summary,
        }

    def write_manifest(self):
        path = self.manifest_path
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='\n', encoding='utf-8') as handle:
            json.dump(self.manifest(), handle, indent=2, sort_keys=True, default=str)
            handle.write('\n')
        logger.info('Manifeste écrit dans %s', path)

    def __exit__(self, exc_type, exc, tb):
        self.wall_time = round(time.perf_counter() - self._started, 3)
        if exc is not None:
            logger.error('Exécution %s en échec: %s', self.kind, exc)
            if self.run is not None:
                self.run.fail(str(exc))
            return False
        if self.manifest_path is not None:
            self.add_output('manifest', self.manifest_path)
            self.write_manifest()
        if self.run is not None:
            self.run.finish(outputs=self.outputs, wall_time=self.wall_time)
        return False
