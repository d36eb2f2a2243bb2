#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Synthetic landmark sequences with known ground truth.

Randomness comes from numpy's PCG64 bit generator seeded with the spec seed, so a
(spec, seed) pair reproduces the same bits on every platform numpy supports.
"""

import json
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from src.errors import BadEvent, BadIndex, BadSpec
from src.logger import logger
from src.utils.analysis import AUEvent, au_approx_response
from src.utils.response import box_response
from src.utils.seqdata import ResponseKind, ScalarResponse, Sequence

SUITES = ('default', 'outlier', 'rise', 'fall', 'two_au')


class ProfileKind(str, Enum):
    TRAPEZOID = 'Trapezoid'
    RAMP = 'Ramp'
    BOX = 'Box'
    AU_EVENT = 'AUEvent'


class OutlierMode(str, Enum):
    JUMP_EVERY_FRAME = 'JumpEveryFrame'
    BURST_FRAMES = 'BurstFrames'


@dataclass(frozen=True)
class Profile:
    """
    Course of a moving point over time, values in [0, 1].

    Trapezoid: edges centred on t1 and t2, each `ramp` frames wide.
    Ramp: a single edge; rising at t1 when only t1 is set, falling at t2 when only t2 is set.
    Box: 0 for t <= t1, 1 strictly between, 0 from t2 on.
    AUEvent: the labelled action-unit course of `event`.
    """
    kind: ProfileKind
    t1: Optional[int] = None
    t2: Optional[int] = None
    ramp: int = 1
    event: Optional[AUEvent] = None

    def validate(self, T: int) -> None:
        if self.kind is ProfileKind.AU_EVENT:
            if self.event is None:
                raise BadSpec("AUEvent profile needs an event")
            if self.event.ne_end > T - 1:
                raise BadSpec(f"event {self.event.au_id} ends after frame {T - 1}")
            return
        if self.ramp < 1:
            raise BadSpec("ramp must be at least one frame")
        if self.kind is ProfileKind.RAMP:
            edges = [t for t in (self.t1, self.t2) if t is not None]
            if len(edges) != 1:
                raise BadSpec("Ramp profile needs exactly one of t1 (rise) or t2 (fall)")
            if not 0 <= edges[0] <= T - 1:
                raise BadSpec(f"ramp edge {edges[0]} outside [0, {T - 1}]")
            return
        if self.t1 is None or self.t2 is None or not 0 <= self.t1 < self.t2 <= T - 1:
            raise BadSpec(f"{self.kind.value} profile needs 0 <= t1 < t2 <= {T - 1}")

    def values(self, T: int) -> np.ndarray:
        self.validate(T)
        t = np.arange(T, dtype=np.float64)
        if self.kind is ProfileKind.AU_EVENT:
            return au_approx_response(self.event, T).values.copy()
        if self.kind is ProfileKind.BOX:
            return box_response(self.t1, self.t2, T).values.copy()
        rise = None if self.t1 is None else np.clip((t - self.t1) / self.ramp + 0.5, 0.0, 1.0)
        fall = None if self.t2 is None else np.clip((self.t2 - t) / self.ramp + 0.5, 0.0, 1.0)
        if rise is None:
            return fall
        if fall is None:
            return rise
        return np.minimum(rise, fall)

    def to_dict(self) -> Dict[str, Any]:
        data = {'kind': self.kind.value, 't1': self.t1, 't2': self.t2, 'ramp': self.ramp}
        if self.event is not None:
            data['event'] = asdict(self.event)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Profile':
        try:
            event = AUEvent(**data['event']) if data.get('event') else None
            return cls(ProfileKind(data['kind']), data.get('t1'), data.get('t2'),
                       int(data.get('ramp', 1)), event)
        except (KeyError, TypeError, ValueError, BadEvent) as e:
            raise BadSpec(f"invalid profile: {data!r} ({e})") from e


@dataclass(frozen=True)
class MovingPoint:
    index: int
    profile: Profile
    # explicit displacement vector; otherwise `amplitude` along the outward direction
    displacement: Optional[Tuple[float, ...]] = None
    amplitude: float = 10.0


@dataclass(frozen=True)
class Outlier:
    index: int
    mode: OutlierMode
    # inclusive frame range for BurstFrames
    frames: Optional[Tuple[int, int]] = None
    magnitude: float = 0.0


@dataclass(frozen=True)
class SynthSpec:
    num_points: int = 20
    num_frames: int = 100
    dim: int = 2
    moving_points: Tuple[MovingPoint, ...] = ()
    noise_sigma: float = 0.0
    outliers: Tuple[Outlier, ...] = ()
    seed: int = 0
    spread: float = 50.0
    nose_index: int = 0

    def validate(self) -> None:
        if self.dim not in (2, 3):
            raise BadSpec(f"dim must be 2 or 3, got {self.dim}")
        if self.num_points < 1 or self.num_frames < 2:
            raise BadSpec("need at least one point and two frames")
        if self.noise_sigma < 0 or self.spread <= 0:
            raise BadSpec("noise_sigma must be >= 0 and spread > 0")
        if not 0 <= self.nose_index < self.num_points:
            raise BadSpec(f"nose_index {self.nose_index} outside [0, {self.num_points})")
        used = {self.nose_index}
        for mover in self.moving_points:
            if not 0 <= mover.index < self.num_points or mover.index in used:
                raise BadSpec(f"moving point index {mover.index} invalid or repeated")
            used.add(mover.index)
            mover.profile.validate(self.num_frames)
            if mover.displacement is not None:
                if len(mover.displacement) != self.dim or not np.linalg.norm(mover.displacement) > 0:
                    raise BadSpec(f"point {mover.index}: displacement must be a non-zero {self.dim}-vector")
            elif not mover.amplitude > 0:
                raise BadSpec(f"point {mover.index}: amplitude must be positive")
        for outlier in self.outliers:
            if not 0 <= outlier.index < self.num_points or outlier.index in used:
                raise BadSpec(f"outlier index {outlier.index} invalid or repeated")
            used.add(outlier.index)
            _check_outlier(outlier, self.num_frames, BadSpec)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'num_points': self.num_points,
            'num_frames': self.num_frames,
            'dim': self.dim,
            'noise_sigma': self.noise_sigma,
            'seed': self.seed,
            'spread': self.spread,
            'nose_index': self.nose_index,
            'moving_points': [{
                'index': m.index,
                'profile': m.profile.to_dict(),
                'displacement': None if m.displacement is None else list(m.displacement),
                'amplitude': m.amplitude,
            } for m in self.moving_points],
            'outliers': [{
                'index': o.index,
                'mode': o.mode.value,
                'frames': None if o.frames is None else list(o.frames),
                'magnitude': o.magnitude,
            } for o in self.outliers],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SynthSpec':
        try:
            movers = tuple(MovingPoint(
                index=int(m['index']),
                profile=Profile.from_dict(m['profile']),
                displacement=None if m.get('displacement') is None else tuple(float(c) for c in m['displacement']),
                amplitude=float(m.get('amplitude', 10.0)),
            ) for m in data.get('moving_points', []))
            outliers = tuple(Outlier(
                index=int(o['index']),
                mode=OutlierMode(o['mode']),
                frames=None if o.get('frames') is None else (int(o['frames'][0]), int(o['frames'][1])),
                magnitude=float(o.get('magnitude', 0.0)),
            ) for o in data.get('outliers', []))
            spec = cls(
                num_points=int(data.get('num_points', 20)),
                num_frames=int(data.get('num_frames', 100)),
                dim=int(data.get('dim', 2)),
                moving_points=movers,
                noise_sigma=float(data.get('noise_sigma', 0.0)),
                outliers=outliers,
                seed=int(data.get('seed', 0)),
                spread=float(data.get('spread', 50.0)),
                nose_index=int(data.get('nose_index', 0)),
            )
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise BadSpec(f"invalid synth spec: {e}") from e
        spec.validate()
        return spec


@dataclass(frozen=True, eq=False)
class GroundTruth:
    intensity: ScalarResponse
    t1: Optional[int]
    t2: Optional[int]
    moving_set: FrozenSet[int]
    static_set: FrozenSet[int]
    outlier_set: FrozenSet[int]
    events: Tuple[AUEvent, ...] = field(default_factory=tuple)


def _check_outlier(outlier: Outlier, T: int, error: type) -> None:
    if outlier.mode is OutlierMode.BURST_FRAMES:
        if outlier.frames is None or not 0 <= outlier.frames[0] <= outlier.frames[1] <= T - 1:
            raise error(f"burst frames {outlier.frames} outside [0, {T - 1}]")


def corrupt(seq: Sequence, outliers: Tuple[Outlier, ...], seed: int) -> Sequence:
    """
    Apply tracking failures to a sequence.

    JumpEveryFrame replaces the point with a uniform random position inside the
    sequence's bounding box on every frame. BurstFrames adds `magnitude` along one
    random direction over an inclusive frame range.

    Raises:
        BadIndex: Point index or frame range outside the sequence
    """
    if not outliers:
        return seq
    rng = np.random.Generator(np.random.PCG64(seed))
    points = np.array(seq.points, copy=True)
    d, n, T = points.shape
    low = seq.points.min(axis=(1, 2))
    high = seq.points.max(axis=(1, 2))
    for outlier in outliers:
        if not 0 <= outlier.index < n:
            raise BadIndex(f"outlier index {outlier.index} outside [0, {n})")
        _check_outlier(outlier, T, BadIndex)
        if outlier.mode is OutlierMode.JUMP_EVERY_FRAME:
            points[:, outlier.index, :] = rng.uniform(low[:, None], high[:, None], size=(d, T))
        else:
            direction = rng.normal(size=d)
            direction /= np.linalg.norm(direction)
            start, stop = outlier.frames
            points[:, outlier.index, start:stop + 1] += outlier.magnitude * direction[:, None]
    return seq.with_points(points)


def generate(spec: SynthSpec, sequence_id: Optional[str] = None,
             label: Optional[str] = None) -> Tuple[Sequence, GroundTruth]:
    """
    Build a sequence: base + displacement * profile(t) + Gaussian noise for moving points,
    base + noise for static points, corruption for outliers. The nose point stays at the
    origin without noise.

    Raises:
        BadSpec: Invalid spec
    """
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    d, n, T = spec.dim, spec.num_points, spec.num_frames

    base = rng.uniform(-spec.spread, spec.spread, size=(d, n))
    base[:, spec.nose_index] = 0.0
    points = np.repeat(base[:, :, None], T, axis=2)
    if spec.noise_sigma > 0:
        noise = rng.normal(0.0, spec.noise_sigma, size=(d, n, T))
        noise[:, spec.nose_index, :] = 0.0
        points += noise

    for mover in spec.moving_points:
        if mover.displacement is not None:
            displacement = np.asarray(mover.displacement, dtype=np.float64)
        else:
            radial = base[:, mover.index]
            displacement = mover.amplitude * radial / np.linalg.norm(radial)
        points[:, mover.index, :] += displacement[:, None] * mover.profile.values(T)[None, :]

    seq = Sequence(id=sequence_id or f"synth_{spec.seed:04d}", points=points,
                   label=label, nose_index=spec.nose_index)
    # corruption draws from a stream derived from the same seed
    seq = corrupt(seq, spec.outliers, int(rng.integers(0, 2 ** 32)))

    moving = frozenset(m.index for m in spec.moving_points)
    outlier_set = frozenset(o.index for o in spec.outliers)
    static = frozenset(range(n)) - moving - outlier_set
    first = spec.moving_points[0].profile if spec.moving_points else None
    intensity = first.values(T) if first is not None else np.zeros(T)
    events = tuple(dict.fromkeys(m.profile.event for m in spec.moving_points if m.profile.event is not None))
    truth = GroundTruth(
        intensity=ScalarResponse(intensity, ResponseKind.APPROXIMATED),
        t1=first.t1 if first is not None else None,
        t2=first.t2 if first is not None else None,
        moving_set=moving,
        static_set=static,
        outlier_set=outlier_set,
        events=events,
    )
    logger.debug(f"Generated {seq!r} with {len(moving)} movers and {len(outlier_set)} outliers")
    return seq, truth


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

BLINK = AUEvent('AU45', 20, 24, 26, 28, 32)
CHIN = AUEvent('AU17', 40, 50, 60, 80, 90)


def suite_spec(name: str, seed: int = 0) -> SynthSpec:
    """
    Named generator settings.

    default: 20 points, 5 outward movers (amplitude 10) on a trapezoid with edges at 20 and 60
    outlier: default plus one point jumping every frame
    rise, fall: one-sided single-frame steps (edge at 30 and 70)
    two_au: a short blink on 2 points and a long chin motion on 5 points
    """
    trapezoid = Profile(ProfileKind.TRAPEZOID, t1=20, t2=60, ramp=4)
    if name in ('default', 'outlier'):
        movers = tuple(MovingPoint(i, trapezoid, amplitude=10.0) for i in range(1, 6))
        outliers = (Outlier(19, OutlierMode.JUMP_EVERY_FRAME),) if name == 'outlier' else ()
        return SynthSpec(20, 100, 2, movers, 2.0, outliers, seed)
    if name == 'rise':
        ramp = Profile(ProfileKind.RAMP, t1=30, ramp=1)
        return SynthSpec(20, 100, 2, tuple(MovingPoint(i, ramp) for i in range(1, 6)), 2.0, (), seed)
    if name == 'fall':
        ramp = Profile(ProfileKind.RAMP, t2=70, ramp=1)
        return SynthSpec(20, 100, 2, tuple(MovingPoint(i, ramp) for i in range(1, 6)), 2.0, (), seed)
    if name == 'two_au':
        blink = Profile(ProfileKind.AU_EVENT, event=BLINK)
        chin = Profile(ProfileKind.AU_EVENT, event=CHIN)
        movers = tuple([MovingPoint(i, blink, amplitude=6.0) for i in (1, 2)] +
                       [MovingPoint(i, chin, amplitude=15.0) for i in range(3, 8)])
        return SynthSpec(20, 100, 2, movers, 0.4, (), seed)
    raise BadSpec(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")


def suite_events(name: str) -> List[AUEvent]:
    return [BLINK, CHIN] if name == 'two_au' else []


def save_synth_spec(spec: SynthSpec, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(spec.to_dict(), f, indent=2, sort_keys=True)


def load_synth_spec(path: str) -> SynthSpec:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise BadSpec(f"{path}: {e}") from e
    return SynthSpec.from_dict(data)


def with_seed(spec: SynthSpec, seed: int) -> SynthSpec:
    return replace(spec, seed=seed)
