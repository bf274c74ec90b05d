"""
MOT Challenge text files and the binary embedding sidecar.

Text rows are ``frame,id,left,top,width,height,conf,x,y,z`` with LF line
endings and '.' decimals. Ground-truth files may use the 9-column MOT17
layout ``frame,id,left,top,width,height,flag,class,visibility``; the last
two columns are then stored in ``x`` and ``y``.

The sidecar starts with ``b"EMB1"``, then u32 D and u32 R, then R records
of (u32 frame, u32 det_index, D x f32), all little-endian.
"""

import csv
import logging
import math
import struct
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .appearance import normalize
from .association import Detection
from .exceptions import AppearanceError, MissingEmbeddingError, MotFormatError, MotIOError
from .geometry import BBox

logger = logging.getLogger(__name__)

EMBEDDING_MAGIC = b'EMB1'
EMBEDDING_HEADER = struct.Struct('<4sII')


@dataclass(frozen=True)
class MotRow:
    frame: int
    id: int
    left: float
    top: float
    width: float
    height: float
    conf: float = 1.0
    x: float = -1.0
    y: float = -1.0
    z: float = -1.0

    @property
    def box(self):
        return BBox(self.left, self.top, self.width, self.height)


def _format_number(value):
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def _format_row(values):
    return ','.join(_format_number(v) for v in values) + '\n'


def _parse_row(path, lineno, fields, columns):
    if len(fields) not in columns:
        expected = ' ou '.join(str(c) for c in sorted(columns))
        raise MotFormatError(path, lineno, f'{expected} colonnes attendues, {len(fields)} trouvées')
    try:
        values = [float(field) for field in fields]
    except ValueError as exc:
        raise MotFormatError(path, lineno, f'valeur non numérique ({exc})') from exc
    if not all(math.isfinite(v) for v in values):
        raise MotFormatError(path, lineno, 'valeur non finie')
    if not values[0].is_integer() or not values[1].is_integer():
        raise MotFormatError(path, lineno, 'frame et id doivent être entiers')
    frame, ident = int(values[0]), int(values[1])
    if frame < 1:
        raise MotFormatError(path, lineno, f'frame doit être >= 1, reçu {frame}')
    if values[4] < 0 or values[5] < 0:
        raise MotFormatError(path, lineno, 'largeur et hauteur doivent être positives')
    extra = values[6:] + [-1.0] * (10 - len(values))
    return MotRow(frame, ident, values[2], values[3], values[4], values[5], *extra[:4])


def _numbered_rows(path, columns):
    """
    (line number, row) for every non-blank line of a MOT text file, in file order.

    Raises:
        MotFormatError: the first malformed line, with its number.
        MotIOError: the file cannot be read.
    """
    path = Path(path)
    try:
        with open(path, newline='', encoding='utf-8') as handle:
            rows = []
            for lineno, fields in enumerate(csv.reader(handle), start=1):
                fields = [f.strip() for f in fields]
                if not any(fields):
                    continue
                rows.append((lineno, _parse_row(path, lineno, fields, columns)))
            return rows
    except OSError as exc:
        raise MotIOError(path, exc.strerror or str(exc)) from exc


def _write_lines(path, lines):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='\n', encoding='utf-8') as handle:
            handle.writelines(lines)
    except OSError as exc:
        raise MotIOError(path, exc.strerror or str(exc)) from exc


def _frame_sorted(rows):
    return sorted(rows, key=lambda row: row.frame)


def read_rows(path, columns=(10,)):
    """
    Every row of a MOT text file, in file order.
    """
    return [row for _, row in _numbered_rows(path, columns)]


def _positive_ids(path, columns, what):
    rows = []
    for lineno, row in _numbered_rows(path, columns):
        if row.id < 1:
            raise MotFormatError(path, lineno, f'id {what} invalide: {row.id}')
        rows.append(row)
    return _frame_sorted(rows)


def read_ground_truth(path):
    """
    Ground-truth rows (9 or 10 columns), frame-sorted and stable within a frame.

    Ids must be positive; a non-positive id is reported with its line.
    """
    return _positive_ids(path, (9, 10), 'de vérité terrain')


def read_results(path):
    """
    Tracker result rows, frame-sorted. Ids must be positive.
    """
    return _positive_ids(path, (10,), 'de résultat')


def write_detections(rows, path):
    """
    Detection file rows ``frame,-1,left,top,w,h,conf,-1,-1,-1`` in the given order.
    """
    _write_lines(path, [
        _format_row((r.frame, -1, r.left, r.top, r.width, r.height, r.conf, -1, -1, -1))
        for r in rows
    ])


def write_ground_truth(rows, path):
    """
    9-column ground truth: ``frame,id,left,top,w,h,1,1,visibility``.
    """
    rows = sorted(rows, key=lambda r: (r.frame, r.id))
    _write_lines(path, [
        _format_row((r.frame, r.id, r.left, r.top, r.width, r.height, 1, 1, r.y))
        for r in rows
    ])


def trajectory_rows(trajectories):
    """
    Result rows of a list of tracklets, sorted by (frame, id).
    """
    rows = [
        MotRow(det.frame, t.id, *det.box.as_tlwh(), conf=det.confidence)
        for t in trajectories
        for det in t.detections
    ]
    return sorted(rows, key=lambda r: (r.frame, r.id))


def write_results(trajectories, path):
    """
    Write tracker output in MOT result format, sorted by (frame, id).

    The confidence column carries the detection confidence.
    """
    rows = trajectory_rows(trajectories)
    ids = {t.id for t in trajectories}
    if len(ids) != len(trajectories) or any(i < 1 for i in ids):
        raise ValueError('Les trajectoires doivent avoir des ids positifs et uniques')
    _write_lines(path, [
        _format_row((r.frame, r.id, r.left, r.top, r.width, r.height, r.conf, -1, -1, -1))
        for r in rows
    ])
    logger.info('%d lignes écrites dans %s', len(rows), path)


@dataclass
class EmbeddingTable:
    """
    Embeddings keyed by (frame, det_index).
    """
    dim: int
    vectors: dict

    def __len__(self):
        return len(self.vectors)

    def get(self, frame, det_index):
        return self.vectors.get((frame, det_index))


def _record_dtype(dim):
    return np.dtype([('frame', '<u4'), ('det_index', '<u4'), ('values', '<f4', (dim,))])


def write_embeddings(table, path):
    """
    Write an ``EmbeddingTable`` in the binary EMB1 format, sorted by key.
    """
    keys = sorted(table.vectors)
    records = np.zeros(len(keys), dtype=_record_dtype(table.dim))
    for k, key in enumerate(keys):
        vector = np.asarray(table.vectors[key], dtype=np.float32)
        if vector.shape != (table.dim,):
            raise ValueError(f'Dimension incohérente pour {key}: {vector.shape}')
        records[k] = (key[0], key[1], vector)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'wb') as handle:
            handle.write(EMBEDDING_HEADER.pack(EMBEDDING_MAGIC, table.dim, len(keys)))
            handle.write(records.tobytes())
    except OSError as exc:
        raise MotIOError(path, exc.strerror or str(exc)) from exc


def _read_binary_embeddings(path, payload):
    if len(payload) < EMBEDDING_HEADER.size:
        raise MotFormatError(path, None, 'en-tête tronqué')
    magic, dim, count = EMBEDDING_HEADER.unpack_from(payload)
    if magic != EMBEDDING_MAGIC:
        raise MotFormatError(path, None, f'signature inattendue {magic!r}')
    if dim == 0:
        raise MotFormatError(path, None, 'dimension nulle')
    dtype = _record_dtype(dim)
    body = payload[EMBEDDING_HEADER.size:]
    if len(body) != count * dtype.itemsize:
        raise MotFormatError(
            path, None, f'{count} enregistrements annoncés, {len(body) / dtype.itemsize:g} présents'
        )
    records = np.frombuffer(body, dtype=dtype)
    vectors = {}
    for record in records:
        key = (int(record['frame']), int(record['det_index']))
        if key in vectors:
            raise MotFormatError(path, None, f'clé dupliquée (frame={key[0]}, index={key[1]})')
        vectors[key] = record['values'].astype(np.float64)
    return EmbeddingTable(int(dim), vectors)


def _read_csv_embeddings(path):
    vectors = {}
    dim = None
    with open(path, newline='', encoding='utf-8') as handle:
        for lineno, fields in enumerate(csv.reader(handle), start=1):
            if not any(f.strip() for f in fields):
                continue
            if len(fields) < 3:
                raise MotFormatError(path, lineno, 'ligne attendue "frame,det_index,v1,...,vD"')
            try:
                frame, index = int(fields[0]), int(fields[1])
                values = np.array([float(f) for f in fields[2:]])
            except ValueError as exc:
                raise MotFormatError(path, lineno, f'valeur non numérique ({exc})') from exc
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise MotFormatError(path, lineno, f'dimension {len(values)} au lieu de {dim}')
            if (frame, index) in vectors:
                raise MotFormatError(path, lineno, f'clé dupliquée (frame={frame}, index={index})')
            vectors[(frame, index)] = values
    return EmbeddingTable(dim or 0, vectors)


def read_embeddings(path):
    """
    Read an embedding sidecar; ``.csv`` files use the text fallback format.
    """
    path = Path(path)
    try:
        if path.suffix.lower() == '.csv':
            return _read_csv_embeddings(path)
        return _read_binary_embeddings(path, path.read_bytes())
    except OSError as exc:
        raise MotIOError(path, exc.strerror or str(exc)) from exc


def format_embeddings(table, limit=None):
    """
    Text dump of a table, one ``frame,det_index,v1,...`` line per record.
    """
    lines = []
    for k, key in enumerate(sorted(table.vectors)):
        if limit is not None and k >= limit:
            break
        values = ','.join(f'{v:.6g}' for v in table.vectors[key])
        lines.append(f'{key[0]},{key[1]},{values}')
    return lines


def default_embedding_path(det_path):
    return Path(det_path).with_suffix('.emb')


def join_detections(rows, table, sigma, embeddings_path='<mémoire>'):
    """
    Keep rows with ``conf >= sigma`` and attach their embeddings.

    The join key is (frame, rank of the row within its frame in file
    order), counted before the confidence filter.

    Raises:
        MissingEmbeddingError: a kept detection has no embedding.
        MotFormatError: a kept detection has a zero embedding.
    """
    ranks = defaultdict(int)
    detections = []
    for source_index, row in enumerate(rows):
        det_index = ranks[row.frame]
        ranks[row.frame] += 1
        if row.conf < sigma:
            continue
        vector = table.get(row.frame, det_index)
        if vector is None:
            raise MissingEmbeddingError(embeddings_path, row.frame, det_index)
        try:
            embedding = normalize(vector)
        except AppearanceError as exc:
            raise MotFormatError(
                embeddings_path, None, f'embedding corrompu (frame={row.frame}, index={det_index}): {exc}'
            ) from exc
        detections.append(Detection(
            frame=row.frame,
            box=row.box,
            confidence=row.conf,
            embedding=embedding,
            source_index=source_index,
            det_index=det_index,
        ))
    return sorted(detections, key=lambda d: d.frame)


def read_detections(path, sigma=0.7, embeddings_path=None):
    """
    Detections of a MOT det file with ``conf >= sigma``, frame-sorted and
    stable within a frame.

    Embeddings come from ``embeddings_path`` (default: the ``.emb`` sidecar
    next to the det file).
    """
    rows = read_rows(path, columns=(10,))
    embeddings_path = embeddings_path or default_embedding_path(path)
    detections = join_detections(rows, read_embeddings(embeddings_path), sigma, embeddings_path)
    logger.info(
        '%s: %d détections gardées, %d sous le seuil %.2f',
        path, len(detections), len(rows) - len(detections), sigma,
    )
    return detections
