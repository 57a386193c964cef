"""
Benchmark driver: run grid points end to end and turn the counts into
per-round logical error rates, likelihood bands and footprint estimates.
"""

import csv
import logging
import math
import time
import zlib
from collections import defaultdict
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from circuits.conf import setting
from circuits.dem import circuit_to_dem
from circuits.exceptions import CircuitError
from circuits.frame_sim import sample
from circuits.generators import family_qubit_count, generate, next_valid_size
from decoding.exceptions import DecodingError
from decoding.mobius import configure, decode_batch, prediction_bits

from .exceptions import BenchmarkError, InsufficientData, NonDecreasing


logger = logging.getLogger(__name__)

CSV_FIELDS = ('family', 'd', 'rounds', 'p', 'basis', 'shots', 'errors', 'seconds', 'detections')
MIN_SECONDS = 1e-9
BISECTION_STEPS = 200


@dataclass(frozen=True)
class GridPoint:
    family: str
    d: int
    rounds: int
    p: float
    basis: str = 'Z'

    def __str__(self):
        return f'{self.family} d={self.d} rounds={self.rounds} p={self.p:g} basis={self.basis}'


@dataclass
class StatRow:
    family: str
    d: int
    rounds: int
    p: float
    basis: str
    shots: int
    errors: int
    seconds: float
    detections: int

    def __post_init__(self):
        if self.shots < 0 or not 0 <= self.errors <= self.shots:
            raise BenchmarkError(f'{self.errors} errors out of {self.shots} shots is not a valid count.')
        if self.seconds <= 0:
            raise BenchmarkError('Decoding time must be positive.')

    @property
    def point(self) -> GridPoint:
        return GridPoint(self.family, self.d, self.rounds, self.p, self.basis)

    @property
    def error_rate(self) -> float:
        return self.errors / self.shots if self.shots else 0.0

    @property
    def seconds_per_detection(self) -> float | None:
        return self.seconds / self.detections if self.detections else None


@dataclass(frozen=True)
class RatePoint:
    """
    Per-round logical error rate of one circuit, bases combined. ``shots``
    and ``errors`` are totals over every basis that was run.
    """

    family: str
    d: int
    rounds: int
    p: float
    rate: float
    low: float
    high: float
    shots: int
    errors: int
    bases: str


@dataclass(frozen=True)
class Footprint:
    family: str
    p: float
    slope: float
    intercept: float
    distance: float
    size: int
    qubits: int

    @property
    def suppression(self) -> float:
        """Error rate reduction per distance step of two."""
        return 10 ** (-2 * self.slope)


def combine_xz(px: float, pz: float) -> float:
    """Probability that either observable fails, assuming independent failures."""
    return 1 - (1 - px) * (1 - pz)


def per_round(p_shot: float, rounds: int) -> float:
    if rounds < 1:
        raise ValueError('rounds must be at least 1.')
    if rounds == 1:
        return p_shot
    return (1 - max(1 - 2 * p_shot, 0.0) ** (1 / rounds)) / 2


def _log_likelihood(q: float, errors: int, shots: int) -> float:
    total = 0.0
    if errors:
        total += errors * math.log(q) if q > 0 else -math.inf
    if shots - errors:
        total += (shots - errors) * math.log1p(-q) if q < 1 else -math.inf
    return total


def binomial_likelihood_band(errors: int, shots: int, ratio: float | None = None) -> tuple[float, float]:
    """
    Error rates whose binomial likelihood is within ``ratio`` of the most
    likely rate ``errors / shots``.
    """
    if shots <= 0:
        raise InsufficientData('Cannot bound an error rate without shots.')
    ratio = ratio or setting('COLORBENCH_LIKELIHOOD_RATIO', 1000.0)
    peak = errors / shots
    floor = _log_likelihood(peak, errors, shots) - math.log(ratio)

    def edge(inside: float, outside: float) -> float:
        if _log_likelihood(outside, errors, shots) >= floor:
            return outside
        for _ in range(BISECTION_STEPS):
            middle = (inside + outside) / 2
            if middle in (inside, outside):
                break
            if _log_likelihood(middle, errors, shots) >= floor:
                inside = middle
            else:
                outside = middle
        return inside

    return edge(peak, 0.0), edge(peak, 1.0)


def fit_log_linear(distances, rates) -> tuple[float, float]:
    """Least-squares slope and intercept of log10(rate) against distance."""
    distances = np.asarray(distances, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if len(set(distances.tolist())) < 2:
        raise InsufficientData('A line fit needs at least two distances.')
    slope, intercept = np.polyfit(distances, np.log10(rates), 1)
    return float(slope), float(intercept)


def merge_rows(rows) -> list[StatRow]:
    """Sum repeated runs of the same grid point."""
    merged = {}
    for row in rows:
        key = row.point
        if key not in merged:
            merged[key] = StatRow(*astuple(row))
            continue
        kept = merged[key]
        kept.shots += row.shots
        kept.errors += row.errors
        kept.seconds += row.seconds
        kept.detections += row.detections
    return list(merged.values())


def summarize(rows, ratio: float | None = None) -> list[RatePoint]:
    """
    Per-round rates for each circuit. When both bases were run their rates
    and band edges are combined with ``combine_xz``.
    """
    groups = defaultdict(list)
    for row in merge_rows(rows):
        groups[(row.family, row.d, row.rounds, row.p)].append(row)

    points = []
    for (family, d, rounds, p), group in sorted(groups.items()):
        rate, low, high = 0.0, 0.0, 0.0
        for row in sorted(group, key=lambda r: r.basis):
            band = binomial_likelihood_band(row.errors, row.shots, ratio) if row.shots else (0.0, 1.0)
            rate = combine_xz(rate, per_round(min(row.error_rate, 0.5), rounds))
            low = combine_xz(low, per_round(min(band[0], 0.5), rounds))
            high = combine_xz(high, per_round(min(band[1], 0.5), rounds))
        points.append(RatePoint(
            family=family, d=d, rounds=rounds, p=p,
            rate=rate, low=low, high=high,
            shots=sum(r.shots for r in group),
            errors=sum(r.errors for r in group),
            bases=''.join(sorted(r.basis for r in group)),
        ))
    return points


def _only(values, name: str):
    values = sorted(set(values))
    if len(values) != 1:
        raise InsufficientData(f'Rows must share one {name}; found {values or "none"}.')
    return values[0]


def extrapolate_footprint(rows, family: str | None = None, p: float | None = None,
                          target: float | None = None) -> Footprint:
    """
    Fit log10 of the per-round error rate against distance and report the
    qubit count of the smallest valid patch reaching ``target``.
    """
    target = target or setting('COLORBENCH_TARGET_ERROR_RATE', 1e-12)
    points = summarize(rows)
    if family is not None:
        points = [pt for pt in points if pt.family == family]
    if p is not None:
        points = [pt for pt in points if math.isclose(pt.p, p, rel_tol=1e-9)]
    family = _only((pt.family for pt in points), 'circuit family')
    p = _only((pt.p for pt in points), 'noise strength')

    usable = [pt for pt in points if pt.rate > 0]
    if len({pt.d for pt in usable}) < 3:
        raise InsufficientData(
            f'Footprint fits need at least 3 distances with observed errors; have {sorted({pt.d for pt in usable})}.'
        )
    slope, intercept = fit_log_linear([pt.d for pt in usable], [pt.rate for pt in usable])
    if slope >= 0:
        raise NonDecreasing(slope)

    distance = (math.log10(target) - intercept) / slope
    size = next_valid_size(family, distance)
    footprint = Footprint(
        family=family, p=p, slope=slope, intercept=intercept,
        distance=distance, size=size, qubits=family_qubit_count(family, size),
    )
    logger.info('Footprint for %s at p=%g: d=%d, %d qubits.', family, p, size, footprint.qubits)
    return footprint


def expand_grid(families, distances, ps, bases=('Z',), rounds: int | None = None) -> list[GridPoint]:
    """Every combination of the given values. ``rounds=None`` runs d rounds."""
    return [
        GridPoint(family, d, rounds or d, p, basis)
        for family in families
        for d in distances
        for p in ps
        for basis in bases
    ]


def point_seed(seed: int, point: GridPoint) -> int:
    """Seed for one grid point, independent of where it sits in the grid."""
    sequence = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(zlib.crc32(str(point).encode()),))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def run_point(point: GridPoint, shots: int, seed: int = 0, *, batch_size: int | None = None,
              max_batch_seconds: float | None = None, strict: bool | None = None,
              workers: int | None = None) -> StatRow:
    """
    Generate, sample and decode one grid point. Only decoding is timed.
    Batches shrink when the next one is predicted to exceed ``max_batch_seconds``.
    """
    size = batch_size or setting('COLORBENCH_BATCH_SIZE', 1024)
    if max_batch_seconds is None:
        max_batch_seconds = setting('COLORBENCH_MAX_BATCH_SECONDS', 1.0)

    try:
        circuit = generate(point.family, point.d, point.rounds, point.p, point.basis)
        cfg = configure(circuit_to_dem(circuit), strict=strict)
        batch = sample(circuit, shots, seed=seed, workers=workers)
    except (CircuitError, DecodingError, ValueError) as exc:
        raise BenchmarkError(f'{point}: {exc}') from exc

    errors = 0
    seconds = 0.0
    start = 0
    while start < batch.num_shots:
        chunk = batch.slice(start, start + size)
        began = time.perf_counter()
        try:
            predictions = decode_batch(cfg, chunk)
        except DecodingError as exc:
            raise BenchmarkError(f'{point}: batch at shot {start}: {exc}') from exc
        elapsed = time.perf_counter() - began
        seconds += elapsed

        bits = prediction_bits(predictions, cfg.observable_count)
        errors += int(np.any(bits != chunk.observable_bits, axis=1).sum())
        start += chunk.num_shots

        per_shot = elapsed / chunk.num_shots
        if size > 1 and per_shot * size > max_batch_seconds:
            size = max(1, int(max_batch_seconds / per_shot))
            logger.warning('%s: batch predicted to exceed %gs, shrinking to %d shots.', point, max_batch_seconds, size)

    return StatRow(
        family=point.family, d=point.d, rounds=point.rounds, p=point.p, basis=point.basis,
        shots=batch.num_shots, errors=errors, seconds=max(seconds, MIN_SECONDS),
        detections=batch.detection_events,
    )


def run_grid(points, shots: int, seed: int = 0, **options) -> list[StatRow]:
    """One StatRow per grid point, in grid order."""
    rows = []
    for point in points:
        row = run_point(point, shots, point_seed(seed, point), **options)
        logger.info('%s: %d/%d errors in %.3fs.', point, row.errors, row.shots, row.seconds)
        rows.append(row)
    return rows


def write_csv(rows, target) -> None:
    """Write rows to a path or an open text stream."""
    if hasattr(target, 'write'):
        _write_rows(rows, target)
        return
    with Path(target).open('w', newline='', encoding='utf-8') as handle:
        _write_rows(rows, handle)


def _write_rows(rows, handle) -> None:
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([getattr(row, name) for name in CSV_FIELDS])


def read_csv(source) -> list[StatRow]:
    if hasattr(source, 'read'):
        return _read_rows(source)
    with Path(source).open(newline='', encoding='utf-8') as handle:
        return _read_rows(handle)


def _read_rows(handle) -> list[StatRow]:
    reader = csv.DictReader(handle)
    missing = [name for name in CSV_FIELDS if name not in (reader.fieldnames or ())]
    if missing:
        raise BenchmarkError(f'CSV is missing columns: {", ".join(missing)}.')

    types = {f.name: f.type for f in fields(StatRow)}
    rows = []
    for line, record in enumerate(reader, start=2):
        try:
            values = {name: types[name](record[name].strip()) for name in CSV_FIELDS}
        except (TypeError, ValueError, AttributeError) as exc:
            raise BenchmarkError(f'line {line}: {exc}') from exc
        rows.append(StatRow(**values))
    return rows
