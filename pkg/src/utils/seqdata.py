#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Landmark sequence data model, file ingestion/emission and centering.

A Sequence holds a d x N x T tensor (dimension, landmark, frame) plus metadata.
Supported file formats:
    long  - CSV `frame,point,x,y[,z]`, one row per (frame, point), any row order
    wide  - CSV `frame,p0_x,p0_y[,p0_z],p1_x,...`, one row per frame
    json  - `{"id", "dim", "nose_index", "frames": [[[x, y(, z)], ...], ...]}`

Frame and point numbers in files must be consecutive; a constant offset (1-based
numbering) is allowed and removed. Gaps and missing (point, frame) cells are errors,
never interpolated.
"""

import json
import os
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.errors import (
    BadIndex,
    MissingReference,
    NonFiniteCoordinate,
    ParseError,
    ShapeError,
)
from src.logger import logger

AXES = ('x', 'y', 'z')
WIDE_COLUMN = re.compile(r'^p(\d+)_([xyz])$')


class SequenceFormat(str, Enum):
    LONG = 'long'
    WIDE = 'wide'
    JSON = 'json'

    @classmethod
    def parse(cls, value: 'str | SequenceFormat') -> 'SequenceFormat':
        if isinstance(value, SequenceFormat):
            return value
        aliases = {'longcsv': 'long', 'widecsv': 'wide', 'csv': 'long'}
        key = str(value).strip().lower()
        try:
            return cls(aliases.get(key, key))
        except ValueError as e:
            raise ParseError(f"unknown sequence format: {value!r}") from e


class ResponseKind(str, Enum):
    LOCAL = 'Local'
    DERIVATIVE = 'Derivative'
    APPROXIMATED = 'Approximated'
    FINAL = 'Final'
    TEMPLATE = 'Template'
    ALIGNED = 'Aligned'
    GLOBAL_PCA = 'GlobalPCA'


def _frozen(values: np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


def minmax_scale(values: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant vector maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    low = values.min()
    span = values.max() - low
    if span == 0:
        return np.zeros_like(values)
    return (values - low) / span


@dataclass(frozen=True, eq=False)
class Sequence:
    """One recording: points[c, i, t] is coordinate c of landmark i at frame t."""
    id: str
    points: np.ndarray
    subject: Optional[str] = None
    label: Optional[str] = None
    nose_index: Optional[int] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 3:
            raise ShapeError(f"sequence {self.id}: expected a d x N x T tensor, got {points.ndim} dims")
        d, n, t = points.shape
        if d not in (2, 3):
            raise ShapeError(f"sequence {self.id}: dimension must be 2 or 3, got {d}")
        if n < 1:
            raise ShapeError(f"sequence {self.id}: needs at least one point")
        if t < 2:
            raise ShapeError(f"sequence {self.id}: needs at least two frames, got {t}")
        if not np.all(np.isfinite(points)):
            raise NonFiniteCoordinate(f"sequence {self.id}: non-finite coordinate")
        if self.nose_index is not None and not 0 <= self.nose_index < n:
            raise BadIndex(f"sequence {self.id}: nose_index {self.nose_index} outside [0, {n})")
        object.__setattr__(self, 'points', _frozen(points))

    @property
    def dim(self) -> int:
        return self.points.shape[0]

    @property
    def num_points(self) -> int:
        return self.points.shape[1]

    @property
    def num_frames(self) -> int:
        return self.points.shape[2]

    def with_points(self, points: np.ndarray) -> 'Sequence':
        return replace(self, points=points)

    def __repr__(self) -> str:
        return (f"<Sequence id={self.id} d={self.dim} N={self.num_points} "
                f"T={self.num_frames} label={self.label}>")


@dataclass(frozen=True, eq=False)
class ScalarResponse:
    values: np.ndarray
    kind: ResponseKind

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ShapeError("response values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise NonFiniteCoordinate(f"{self.kind.value} response has non-finite values")
        object.__setattr__(self, 'values', _frozen(values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """Row i is the local response of landmark i; degenerate marks zero-variance points."""
    rows: np.ndarray
    degenerate: Optional[np.ndarray] = None

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        if not np.all(np.isfinite(rows)):
            raise NonFiniteCoordinate("response matrix has non-finite values")
        if self.degenerate is None:
            degenerate = ~np.any(rows != 0, axis=1)
        else:
            degenerate = np.asarray(self.degenerate, dtype=bool)
            if degenerate.shape != (rows.shape[0],):
                raise ShapeError("degenerate mask must have one entry per row")
        degenerate = degenerate.copy()
        degenerate.setflags(write=False)
        object.__setattr__(self, 'rows', _frozen(rows))
        object.__setattr__(self, 'degenerate', degenerate)

    @property
    def shape(self):
        return self.rows.shape


@dataclass(frozen=True, eq=False)
class WeightVector:
    weights: np.ndarray
    # D_i of the ranking, kept for export
    distances: Optional[np.ndarray] = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 1:
            raise ShapeError("weights must be one-dimensional")
        if np.any(weights < 0) or np.any(weights > 1):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, 'weights', _frozen(weights))
        if self.distances is not None:
            object.__setattr__(self, 'distances', _frozen(self.distances))

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ManifestEntry:
    sequence_id: str
    path: str
    format: SequenceFormat
    label: Optional[str] = None
    subject: Optional[str] = None
    nose_index: Optional[int] = None


# ---------------------------------------------------------------------------
# Reading
# ---------------------------------------------------------------------------

def _read_csv(path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, float_precision='round_trip', skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"{path}: {e}") from e


def _integer_column(frame: pd.DataFrame, column: str, path: str) -> np.ndarray:
    try:
        values = pd.to_numeric(frame[column], errors='raise')
    except (ValueError, TypeError) as e:
        raise ParseError(f"{path}: column {column} is not numeric") from e
    if values.isna().any():
        raise ParseError(f"{path}: column {column} has empty cells")
    array = values.to_numpy(dtype=np.float64)
    if np.any(array != np.round(array)) or np.any(array < 0):
        raise ParseError(f"{path}: column {column} must hold non-negative integers")
    return array.astype(np.int64)


def _coordinate_block(frame: pd.DataFrame, columns: List[str], path: str) -> np.ndarray:
    try:
        block = frame[columns].apply(pd.to_numeric, errors='raise')
    except (ValueError, TypeError) as e:
        raise ParseError(f"{path}: coordinate columns must be decimal numbers") from e
    array = block.to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise NonFiniteCoordinate(f"{path}: non-finite coordinate")
    return array


def _check_consecutive(ids: np.ndarray, kind: str, path: str) -> None:
    """Sorted unique ids must run without gaps from their first value (0- or 1-based alike)."""
    if len(ids) == 0:
        raise ShapeError(f"{path}: no {kind} rows")
    expected = np.arange(ids[0], ids[0] + len(ids))
    gaps = np.flatnonzero(ids != expected)
    if len(gaps):
        missing = int(expected[gaps[0]])
        raise ShapeError(f"{path}: {kind} {missing} is missing; {kind} ids must be consecutive")


def _read_long(path: str) -> np.ndarray:
    frame = _read_csv(path)
    columns = list(frame.columns)
    if columns[:4] != ['frame', 'point', 'x', 'y'] or columns[4:] not in ([], ['z']):
        raise ParseError(f"{path}: expected header frame,point,x,y[,z], got {','.join(map(str, columns))}")
    axes = columns[2:]
    frames = _integer_column(frame, 'frame', path)
    points = _integer_column(frame, 'point', path)
    coords = _coordinate_block(frame, axes, path)

    frame_ids, frame_pos = np.unique(frames, return_inverse=True)
    point_ids, point_pos = np.unique(points, return_inverse=True)
    _check_consecutive(frame_ids, 'frame', path)
    _check_consecutive(point_ids, 'point', path)
    t, n = len(frame_ids), len(point_ids)
    if len(frame) != t * n:
        raise ShapeError(f"{path}: {len(frame)} rows for {n} points x {t} frames; missing or extra cells")
    cells = frame_pos * n + point_pos
    if len(np.unique(cells)) != len(cells):
        raise ShapeError(f"{path}: duplicate (frame, point) rows")

    tensor = np.empty((len(axes), n, t), dtype=np.float64)
    tensor[:, point_pos, frame_pos] = coords.T
    return tensor


def _read_wide(path: str) -> np.ndarray:
    frame = _read_csv(path)
    columns = list(frame.columns)
    if not columns or columns[0] != 'frame':
        raise ParseError(f"{path}: first column must be 'frame'")
    layout: Dict[int, List[str]] = {}
    for column in columns[1:]:
        match = WIDE_COLUMN.match(str(column))
        if match is None:
            raise ParseError(f"{path}: unexpected column {column!r}")
        layout.setdefault(int(match.group(1)), []).append(match.group(2))
    if not layout:
        raise ShapeError(f"{path}: no point columns")
    point_ids = sorted(layout)
    _check_consecutive(np.array(point_ids), 'point', path)
    axes = layout[point_ids[0]]
    if axes not in (['x', 'y'], ['x', 'y', 'z']):
        raise ShapeError(f"{path}: point p{point_ids[0]} has axes {axes}")
    for point in point_ids:
        if layout[point] != axes:
            raise ShapeError(f"{path}: point p{point} has axes {layout[point]}, expected {axes}")

    frames = _integer_column(frame, 'frame', path)
    if len(np.unique(frames)) != len(frames):
        raise ShapeError(f"{path}: duplicate frame rows")
    _check_consecutive(np.sort(frames), 'frame', path)
    order = np.argsort(frames, kind='stable')
    ordered = [f"p{point}_{axis}" for point in point_ids for axis in axes]
    coords = _coordinate_block(frame, ordered, path)[order]

    t, n, d = len(frames), len(point_ids), len(axes)
    # rows are frames, columns run point-major then axis
    return coords.reshape(t, n, d).transpose(2, 1, 0).copy()


def _read_json(path: str) -> Dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e}") from e
    if not isinstance(document, dict) or 'frames' not in document:
        raise ParseError(f"{path}: expected an object with a 'frames' list")
    frames = document['frames']
    dim = document.get('dim')
    if not isinstance(frames, list) or not frames:
        raise ShapeError(f"{path}: 'frames' must be a non-empty list")
    n = len(frames[0]) if isinstance(frames[0], list) else 0
    if n == 0:
        raise ShapeError(f"{path}: frames must hold at least one point")
    for t, frame in enumerate(frames):
        if not isinstance(frame, list) or len(frame) != n:
            raise ShapeError(f"{path}: frame {t} does not have {n} points")
        for point in frame:
            if not isinstance(point, list) or len(point) != (dim or len(frames[0][0])):
                raise ShapeError(f"{path}: frame {t} has a point with the wrong dimension")
            if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in point):
                raise ParseError(f"{path}: frame {t} has a non-numeric coordinate")
    tensor = np.asarray(frames, dtype=np.float64).transpose(2, 1, 0).copy()
    if not np.all(np.isfinite(tensor)):
        raise NonFiniteCoordinate(f"{path}: non-finite coordinate")
    document['_tensor'] = tensor
    return document


def load_sequence(path: str, format: 'str | SequenceFormat' = SequenceFormat.LONG,
                  sequence_id: Optional[str] = None, label: Optional[str] = None,
                  subject: Optional[str] = None, nose_index: Optional[int] = None) -> Sequence:
    """
    Load a landmark sequence from disk.

    Args:
        path: File to read
        format: long, wide or json
        sequence_id: Id for the sequence; defaults to the JSON id or the file stem
        label: Optional label (e.g. emotion name)
        subject: Optional subject id
        nose_index: Reference landmark; overrides a nose_index stored in JSON

    Returns:
        Sequence with a d x N x T tensor

    Raises:
        ParseError, ShapeError, NonFiniteCoordinate, FileNotFoundError
    """
    fmt = SequenceFormat.parse(format)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"sequence file not found: {path}")
    stem = os.path.splitext(os.path.basename(path))[0]

    if fmt is SequenceFormat.JSON:
        document = _read_json(path)
        stored_nose = document.get('nose_index')
        sequence = Sequence(
            id=sequence_id or str(document.get('id') or stem),
            points=document['_tensor'],
            subject=subject if subject is not None else document.get('subject'),
            label=label if label is not None else document.get('label'),
            nose_index=nose_index if nose_index is not None else stored_nose,
        )
    else:
        tensor = _read_long(path) if fmt is SequenceFormat.LONG else _read_wide(path)
        sequence = Sequence(id=sequence_id or stem, points=tensor, subject=subject,
                            label=label, nose_index=nose_index)

    logger.debug(f"Loaded {sequence!r} from {path}")
    return sequence


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------

def save_sequence(seq: Sequence, path: str, format: 'str | SequenceFormat' = SequenceFormat.LONG) -> None:
    """
    Write a sequence in a format load_sequence reads back with identical values.

    Raises:
        OSError: The target is not writable
    """
    fmt = SequenceFormat.parse(format)
    d, n, t = seq.points.shape
    axes = list(AXES[:d])

    if fmt is SequenceFormat.LONG:
        frames = np.repeat(np.arange(t), n)
        points = np.tile(np.arange(n), t)
        coords = seq.points.transpose(2, 1, 0).reshape(t * n, d)
        table = pd.DataFrame({'frame': frames, 'point': points})
        for c, axis in enumerate(axes):
            table[axis] = coords[:, c]
        table.to_csv(path, index=False, float_format='%.17g')
    elif fmt is SequenceFormat.WIDE:
        table = pd.DataFrame({'frame': np.arange(t)})
        columns = {f"p{i}_{axis}": seq.points[c, i, :] for i in range(n) for c, axis in enumerate(axes)}
        table = pd.concat([table, pd.DataFrame(columns)], axis=1)
        table.to_csv(path, index=False, float_format='%.17g')
    else:
        document = {
            'id': seq.id,
            'dim': d,
            'nose_index': seq.nose_index,
            'subject': seq.subject,
            'label': seq.label,
            'frames': seq.points.transpose(2, 1, 0).tolist(),
        }
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(document, f)
    logger.debug(f"Saved {seq!r} to {path} as {fmt.value}")


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def center_sequence(seq: Sequence, reference: Optional[int] = None) -> Sequence:
    """
    Translate every frame so the reference landmark sits at the origin.

    Args:
        seq: Input sequence, left unmodified
        reference: Landmark index; defaults to seq.nose_index

    Raises:
        MissingReference: Neither reference nor seq.nose_index is set
        BadIndex: Reference outside [0, N)
    """
    index = reference if reference is not None else seq.nose_index
    if index is None:
        raise MissingReference(f"sequence {seq.id}: no nose_index and no reference point given")
    if not 0 <= index < seq.num_points:
        raise BadIndex(f"sequence {seq.id}: reference {index} outside [0, {seq.num_points})")
    offset = seq.points[:, index:index + 1, :]
    return replace(seq, points=seq.points - offset, nose_index=index)


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

MANIFEST_COLUMNS = ['sequence_id', 'path', 'format', 'label', 'subject', 'nose_index']


def load_manifest(path: str) -> List[ManifestEntry]:
    """
    Read a batch manifest `sequence_id,path,format,label,subject,nose_index`.

    Relative paths are resolved against the manifest's directory.
    """
    try:
        table = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"{path}: unreadable manifest: {e}") from e
    missing = [column for column in MANIFEST_COLUMNS[:3] if column not in table.columns]
    if missing:
        raise ParseError(f"{path}: manifest lacks columns {missing}")
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for row in table.to_dict('records'):
        nose = row.get('nose_index', '').strip()
        try:
            nose_index = int(nose) if nose else None
        except ValueError as e:
            raise ParseError(f"{path}: nose_index {nose!r} is not an integer") from e
        entry_path = row['path'].strip()
        entries.append(ManifestEntry(
            sequence_id=row['sequence_id'].strip(),
            path=entry_path if os.path.isabs(entry_path) else os.path.join(base, entry_path),
            format=SequenceFormat.parse(row['format']),
            label=row.get('label', '').strip() or None,
            subject=row.get('subject', '').strip() or None,
            nose_index=nose_index,
        ))
    ids = [entry.sequence_id for entry in entries]
    duplicates = sorted({sid for sid in ids if ids.count(sid) > 1})
    if duplicates:
        raise ParseError(f"{path}: duplicate sequence ids {duplicates}")
    logger.info(f"Loaded manifest {path} with {len(entries)} sequences")
    return entries


def write_manifest(entries: List[ManifestEntry], path: str) -> None:
    base = os.path.dirname(os.path.abspath(path))
    rows = [{
        'sequence_id': entry.sequence_id,
        'path': os.path.relpath(entry.path, base),
        'format': entry.format.value,
        'label': entry.label or '',
        'subject': entry.subject or '',
        'nose_index': '' if entry.nose_index is None else entry.nose_index,
    } for entry in entries]
    pd.DataFrame(rows, columns=MANIFEST_COLUMNS).to_csv(path, index=False)


def load_entry(entry: ManifestEntry) -> Sequence:
    return load_sequence(entry.path, entry.format, sequence_id=entry.sequence_id,
                         label=entry.label, subject=entry.subject, nose_index=entry.nose_index)
