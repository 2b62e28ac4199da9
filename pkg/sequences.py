"""
Pulse schedules for multi-qubit dynamical decoupling.

Builds and validates the pulse center times of SDD (collective CPMG-timed
X pulses), nested UDD and custom sequences, and (de)serializes them to the
JSON schedule document used by the command line.

Times are absolute (same unit as the total duration T). Qubit 0 is the
innermost NUDD level unless a qubit order is given.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum as PyEnum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Consecutive pulse times must differ by more than this fraction of T
SPACING_TOLERANCE = 1e-12

# Regenerated schedules must reproduce stored times to this fraction of T
MATCH_TOLERANCE = 1e-9

# Largest qubit count for which a NUDD qubit order is searched on load
MAX_ORDER_SEARCH = 6

SCHEDULE_FIELDS = ('num_qubits', 'total_duration', 'pulse_width', 'scheme', 'times')


class ScheduleError(Exception):
    """Raised when a pulse schedule violates its invariants."""

    def __init__(self, message: str, qubit: Optional[int] = None, time: Optional[float] = None):
        self.qubit = qubit
        self.time = time
        where = []
        if qubit is not None:
            where.append(f"qubit {qubit}")
        if time is not None:
            where.append(f"t={time!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class Scheme(str, PyEnum):
    """Pulse sequence family."""
    SDD = "SDD"
    NUDD = "NUDD"
    CUSTOM = "CUSTOM"


# ============================================================================
# Level counts
# ============================================================================

@dataclass(frozen=True)
class NuddLevelCounts:
    """
    NUDD level counts [L_{N-1}, ..., L_0], outermost first.

    Every level except the outermost must carry an even count.
    """
    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(self.counts)
        object.__setattr__(self, 'counts', counts)
        if not counts:
            raise ScheduleError("NUDD level counts must not be empty")
        for position, value in enumerate(counts):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                raise ScheduleError(f"NUDD level count must be a nonnegative integer, got {value!r}")
            if position > 0 and value % 2:
                level = len(counts) - 1 - position
                raise ScheduleError(f"inner NUDD level {level} needs an even count, got {value}")
        object.__setattr__(self, 'counts', tuple(int(c) for c in counts))

    @classmethod
    def parse(cls, text: str) -> 'NuddLevelCounts':
        """Parse '2,2' (outermost first)."""
        try:
            values = [int(part) for part in text.replace(' ', '').split(',') if part]
        except ValueError:
            raise ScheduleError(f"cannot parse NUDD counts {text!r}")
        return cls(tuple(values))

    @property
    def num_qubits(self) -> int:
        return len(self.counts)

    def level(self, n: int) -> int:
        """L_n for level n (0 = innermost)."""
        return self.counts[self.num_qubits - 1 - n]

    def pulses_on_level(self, n: int) -> int:
        """L_n times the product of (L_k + 1) over the outer levels k > n."""
        outer = 1
        for k in range(n + 1, self.num_qubits):
            outer *= self.level(k) + 1
        return self.level(n) * outer

    @property
    def total_pulses(self) -> int:
        return sum(self.pulses_on_level(n) for n in range(self.num_qubits))

    @property
    def degenerate_levels(self) -> List[int]:
        return [n for n in range(self.num_qubits) if self.level(n) == 0]

    def __str__(self) -> str:
        return ','.join(str(c) for c in self.counts)


# ============================================================================
# Schedule
# ============================================================================

@dataclass(frozen=True)
class PulseSchedule:
    """
    Per-qubit pulse center times on [0, T] plus a shared pulse width.

    `level_counts` and `qubit_order` are set for NUDD schedules; qubit_order[n]
    is the qubit that carries level n.
    """
    num_qubits: int
    total_duration: float
    times: Tuple[Tuple[float, ...], ...]
    pulse_width: float = 0.0
    scheme: Scheme = Scheme.CUSTOM
    level_counts: Optional[NuddLevelCounts] = None
    qubit_order: Optional[Tuple[int, ...]] = None
    notes: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, 'times', tuple(tuple(float(t) for t in qt) for qt in self.times))
        object.__setattr__(self, 'scheme', Scheme(self.scheme))
        object.__setattr__(self, 'total_duration', float(self.total_duration))
        object.__setattr__(self, 'pulse_width', float(self.pulse_width))
        if self.qubit_order is not None:
            object.__setattr__(self, 'qubit_order', tuple(int(q) for q in self.qubit_order))
        validate_schedule(self)

    def pulse_count(self, qubit: int) -> int:
        return len(self.times[qubit])

    @property
    def pulse_counts(self) -> Tuple[int, ...]:
        return tuple(len(t) for t in self.times)

    @property
    def total_pulses(self) -> int:
        return sum(self.pulse_counts)

    @property
    def sdd_pulses(self) -> Optional[int]:
        """Per-qubit pulse count D of an SDD schedule."""
        return len(self.times[0]) if self.scheme is Scheme.SDD else None

    def level_of_qubit(self, qubit: int) -> Optional[int]:
        if self.level_counts is None:
            return None
        order = self.qubit_order or tuple(range(self.num_qubits))
        return order.index(qubit)

    def fractions(self, qubit: int) -> np.ndarray:
        """Pulse times of one qubit in units of T."""
        return np.asarray(self.times[qubit], dtype=float) / self.total_duration

    def describe(self) -> str:
        counts = '/'.join(str(c) for c in self.pulse_counts)
        if self.scheme is Scheme.NUDD:
            return f"NUDD ({self.level_counts}) pulses per qubit {counts}, total {self.total_pulses}"
        if self.scheme is Scheme.SDD:
            return f"SDD D={self.sdd_pulses} on {self.num_qubits} qubit(s), total {self.total_pulses}"
        return f"CUSTOM pulses per qubit {counts}, total {self.total_pulses}"


def validate_schedule(schedule: PulseSchedule) -> None:
    """
    Check every PulseSchedule invariant.

    Per qubit the order of checks is: sorted, pulse overlap, bounds.

    Raises:
        ScheduleError: naming the qubit and offending time
    """
    T = schedule.total_duration
    width = schedule.pulse_width
    if not math.isfinite(T) or T <= 0:
        raise ScheduleError(f"total duration must be positive, got {T!r}")
    if not math.isfinite(width) or width < 0:
        raise ScheduleError(f"pulse width must be nonnegative, got {width!r}")
    if schedule.num_qubits < 1 or len(schedule.times) != schedule.num_qubits:
        raise ScheduleError(
            f"schedule declares {schedule.num_qubits} qubit(s) but carries {len(schedule.times)} time list(s)"
        )

    tol = SPACING_TOLERANCE * T
    for qubit, times in enumerate(schedule.times):
        for earlier, later in zip(times, times[1:]):
            if later - earlier <= tol:
                reason = "times must be strictly increasing" if later >= earlier else "times are unsorted"
                raise ScheduleError(reason, qubit=qubit, time=later)
        if width > 0:
            for earlier, later in zip(times, times[1:]):
                if later - earlier < width - tol:
                    raise ScheduleError(f"pulses of width {width!r} overlap", qubit=qubit, time=later)
        for t in times:
            if not math.isfinite(t):
                raise ScheduleError("pulse time is not finite", qubit=qubit, time=t)
            if width > 0:
                if t - width / 2 < -tol or t + width / 2 > T + tol:
                    raise ScheduleError(f"pulse of width {width!r} leaves [0, T]", qubit=qubit, time=t)
            elif t <= 0 or t >= T:
                raise ScheduleError("pulse time outside (0, T)", qubit=qubit, time=t)

    if schedule.scheme is Scheme.SDD:
        reference = schedule.times[0]
        if len(reference) % 2 or not reference:
            raise ScheduleError("SDD needs a positive even pulse count per qubit", qubit=0)
        for qubit, times in enumerate(schedule.times[1:], start=1):
            if times != reference:
                raise ScheduleError("SDD qubits must share identical pulse times", qubit=qubit)

    if schedule.scheme is Scheme.NUDD:
        counts = schedule.level_counts
        if counts is None or counts.num_qubits != schedule.num_qubits:
            raise ScheduleError("NUDD schedule needs level counts for every qubit")
        order = schedule.qubit_order or tuple(range(schedule.num_qubits))
        if sorted(order) != list(range(schedule.num_qubits)):
            raise ScheduleError(f"qubit order {order} is not a permutation")
        for n in range(counts.num_qubits):
            qubit = order[n]
            expected = counts.pulses_on_level(n)
            if schedule.pulse_count(qubit) != expected:
                raise ScheduleError(
                    f"NUDD level {n} needs {expected} pulses, found {schedule.pulse_count(qubit)}", qubit=qubit
                )


# ============================================================================
# Generators
# ============================================================================

def udd_times(L: int, t_start: float, t_end: float) -> List[float]:
    """
    Uhrig pulse times t_start + (t_end - t_start) sin^2(l pi / (2L + 2)), l = 1..L.

    The second half is mirrored from the first so that
    t_l + t_{L+1-l} = t_start + t_end holds to rounding of one subtraction.
    """
    if L < 0:
        raise ScheduleError(f"UDD pulse count must be nonnegative, got {L}")
    if not t_start < t_end:
        raise ScheduleError(f"UDD interval is empty: [{t_start!r}, {t_end!r}]")
    if L == 0:
        return []
    span = t_end - t_start
    half = L // 2
    l = np.arange(1, half + 1)
    first = t_start + span * np.sin(l * np.pi / (2 * L + 2)) ** 2
    middle = [0.5 * (t_start + t_end)] if L % 2 else []
    second = (t_start + t_end) - first[::-1]
    return [float(t) for t in first] + middle + [float(t) for t in second]


def nudd_boundaries(times_by_level: Dict[int, Sequence[float]], level: int, T: float) -> List[float]:
    """Sorted {0, T} plus every pulse time of the levels outside `level`."""
    outer = [t for n, times in times_by_level.items() if n > level for t in times]
    return sorted([0.0, float(T)] + outer)


def nudd_schedule(counts: NuddLevelCounts, T: float, pulse_width: float = 0.0,
                  qubit_order: Optional[Sequence[int]] = None) -> PulseSchedule:
    """
    Nested UDD: level N-1 spans [0, T]; every inner level fills each interval
    between consecutive outer pulse times (and the 0, T anchors) with a UDD
    layer of its own count.

    Args:
        counts: level counts, outermost first
        T: total duration
        pulse_width: shared pulse width
        qubit_order: qubit_order[n] is the qubit carrying level n (default: identity)
    """
    if not isinstance(counts, NuddLevelCounts):
        counts = NuddLevelCounts(tuple(counts))
    N = counts.num_qubits
    order = tuple(qubit_order) if qubit_order is not None else tuple(range(N))
    if sorted(order) != list(range(N)):
        raise ScheduleError(f"qubit order {order} is not a permutation of 0..{N - 1}")

    times_by_level: Dict[int, List[float]] = {}
    for n in range(N - 1, -1, -1):
        boundaries = nudd_boundaries(times_by_level, n, T)
        level_times: List[float] = []
        for a, b in zip(boundaries, boundaries[1:]):
            level_times.extend(udd_times(counts.level(n), a, b))
        times_by_level[n] = level_times

    per_qubit: List[Tuple[float, ...]] = [()] * N
    for n, qubit in enumerate(order):
        per_qubit[qubit] = tuple(times_by_level[n])

    notes = tuple(f"degenerate level {n}: L_{n} = 0, qubit {order[n]} carries no pulses"
                  for n in counts.degenerate_levels)
    schedule = PulseSchedule(
        num_qubits=N, total_duration=T, times=tuple(per_qubit), pulse_width=pulse_width,
        scheme=Scheme.NUDD, level_counts=counts,
        qubit_order=order if qubit_order is not None else None, notes=notes,
    )
    for note in notes:
        logger.info(note)
    logger.debug(f"Built {schedule.describe()}")
    return schedule


def sdd_schedule(N: int, D: int, T: float, pulse_width: float = 0.0) -> PulseSchedule:
    """
    SDD: every qubit gets T_d = (2d - 1) T / (2D), d = 1..D, i.e. the fXffXf
    cell with tau = T / (2D) repeated D / 2 times.
    """
    if N < 1:
        raise ScheduleError(f"SDD needs at least one qubit, got {N}")
    if D <= 0 or D % 2:
        raise ScheduleError(f"D must be even and positive, got {D}")
    d = np.arange(1, D + 1)
    times = tuple(float(t) for t in (2 * d - 1) * T / (2 * D))
    schedule = PulseSchedule(num_qubits=N, total_duration=T, times=(times,) * N,
                             pulse_width=pulse_width, scheme=Scheme.SDD)
    logger.debug(f"Built {schedule.describe()}")
    return schedule


def custom_schedule(times_per_qubit: Sequence[Sequence[float]], T: float,
                    pulse_width: float = 0.0) -> PulseSchedule:
    """Validated schedule from explicit per-qubit times."""
    return PulseSchedule(num_qubits=len(times_per_qubit), total_duration=T,
                         times=tuple(tuple(q) for q in times_per_qubit),
                         pulse_width=pulse_width, scheme=Scheme.CUSTOM)


def free_evolution(N: int, T: float) -> PulseSchedule:
    """No pulses at all (D = 0 on every qubit)."""
    return custom_schedule([[] for _ in range(N)], T)


def rescale_schedule(schedule: PulseSchedule, T_new: float) -> PulseSchedule:
    """Same geometry on a new total duration; times and pulse width scale by T_new / T."""
    if T_new <= 0:
        raise ScheduleError(f"total duration must be positive, got {T_new!r}")
    factor = T_new / schedule.total_duration
    return PulseSchedule(
        num_qubits=schedule.num_qubits, total_duration=T_new,
        times=tuple(tuple(t * factor for t in q) for q in schedule.times),
        pulse_width=schedule.pulse_width * factor, scheme=schedule.scheme,
        level_counts=schedule.level_counts, qubit_order=schedule.qubit_order, notes=schedule.notes,
    )


def sdd_pairing(counts: NuddLevelCounts) -> int:
    """
    Per-qubit SDD count with the same total pulse number as a NUDD layout,
    e.g. (2,2) -> 8 pulses -> D = 4.
    """
    total = counts.total_pulses
    N = counts.num_qubits
    if total % N or (total // N) % 2 or total == 0:
        raise ScheduleError(f"NUDD ({counts}) has {total} pulses, not an even SDD count on {N} qubits")
    return total // N


# ============================================================================
# JSON document
# ============================================================================

def schedule_to_dict(schedule: PulseSchedule) -> Dict:
    return {
        'num_qubits': schedule.num_qubits,
        'total_duration': schedule.total_duration,
        'pulse_width': schedule.pulse_width,
        'scheme': schedule.scheme.value,
        'times': [list(t) for t in schedule.times],
    }


def schedule_from_dict(data: Dict) -> PulseSchedule:
    """
    Rebuild a schedule from its JSON document.

    NUDD documents do not store level counts; they are recovered from the
    pulse counts and confirmed by regenerating the times.
    """
    missing = [key for key in SCHEDULE_FIELDS if key not in data]
    if missing:
        raise ScheduleError(f"schedule document misses field(s): {', '.join(missing)}")
    try:
        scheme = Scheme(str(data['scheme']).upper())
    except ValueError:
        raise ScheduleError(f"unknown scheme {data['scheme']!r}")
    N = int(data['num_qubits'])
    T = float(data['total_duration'])
    width = float(data['pulse_width'])
    times = tuple(tuple(float(t) for t in q) for q in data['times'])

    if scheme is Scheme.CUSTOM:
        return PulseSchedule(num_qubits=N, total_duration=T, times=times, pulse_width=width)

    if scheme is Scheme.SDD:
        schedule = PulseSchedule(num_qubits=N, total_duration=T, times=times,
                                 pulse_width=width, scheme=Scheme.SDD)
        regenerated = sdd_schedule(N, schedule.sdd_pulses, T)
        if not _times_match(regenerated.times, times, T):
            raise ScheduleError("SDD document times do not follow (2d - 1) T / (2D)")
        return schedule

    counts, order = infer_nudd_layout(times, T)
    notes = tuple(f"degenerate level {n}: L_{n} = 0, qubit {order[n]} carries no pulses"
                  for n in counts.degenerate_levels)
    identity = order == tuple(range(N))
    return PulseSchedule(num_qubits=N, total_duration=T, times=times, pulse_width=width,
                         scheme=Scheme.NUDD, level_counts=counts,
                         qubit_order=None if identity else order, notes=notes)


def infer_nudd_layout(times: Sequence[Sequence[float]], T: float) -> Tuple[NuddLevelCounts, Tuple[int, ...]]:
    """
    Find level counts and qubit order reproducing the given NUDD times.

    Raises:
        ScheduleError: when no nested UDD layout matches
    """
    N = len(times)
    pulse_counts = [len(q) for q in times]
    orders = [tuple(range(N))]
    if N <= MAX_ORDER_SEARCH:
        orders += [p for p in itertools.permutations(range(N)) if p != orders[0]]

    for order in orders:
        levels: List[int] = [0] * N
        outer = 1
        feasible = True
        for n in range(N - 1, -1, -1):
            count = pulse_counts[order[n]]
            if count % outer:
                feasible = False
                break
            levels[n] = count // outer
            outer *= levels[n] + 1
        if not feasible:
            continue
        try:
            counts = NuddLevelCounts(tuple(levels[n] for n in range(N - 1, -1, -1)))
            regenerated = nudd_schedule(counts, T, qubit_order=order)
        except ScheduleError:
            continue
        if _times_match(regenerated.times, times, T):
            return counts, order
    raise ScheduleError("NUDD document times do not match any nested UDD layout")


def _times_match(a: Sequence[Sequence[float]], b: Sequence[Sequence[float]], T: float) -> bool:
    if len(a) != len(b):
        return False
    for qa, qb in zip(a, b):
        if len(qa) != len(qb):
            return False
        if qa and np.max(np.abs(np.asarray(qa) - np.asarray(qb))) > MATCH_TOLERANCE * T:
            return False
    return True


def save_schedule(schedule: PulseSchedule, path: str) -> None:
    """Write the JSON schedule document (floats written with repr precision)."""
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(schedule_to_dict(schedule), f, indent=2)
        f.write('\n')
    logger.info(f"Saved {schedule.describe()} to {Path(path).name}")


def load_schedule(path: str) -> PulseSchedule:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ScheduleError(f"schedule file is not valid JSON: {e}")
    schedule = schedule_from_dict(data)
    logger.info(f"Loaded {schedule.describe()} from {Path(path).name}")
    return schedule
