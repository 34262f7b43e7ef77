"""Resonance location, comparison-band selection and trace averaging."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .circuit import FrequencyGrid
from .errors import DomainError
from .sparams import Trace

#: Trace metadata key holding a known series feed resistance (ohms). The
#: resonance search subtracts it so that minima belong to the PDN itself.
FEED_KEY = "port_series_r"

#: Total band width as a fraction of the centre frequency (+/- 5 %).
BAND_FRACTION = 0.10


class Resonance(NamedTuple):
    frequency: float
    magnitude: float  # |Z| in ohms at the minimum


@dataclass(frozen=True)
class Band:
    f_low: float
    f_high: float
    center: float

    def __post_init__(self):
        if not self.f_low < self.f_high:
            raise DomainError(f"empty band [{self.f_low}, {self.f_high}]")

    @property
    def width(self) -> float:
        return self.f_high - self.f_low

    def contains(self, f):
        f = np.asarray(f)
        return (f >= self.f_low) & (f <= self.f_high)

    def __str__(self):
        return f"[{self.f_low / 1e6:.6g}, {self.f_high / 1e6:.6g}] MHz"


def feed_resistance(trace: Trace) -> float:
    """Series feed resistance recorded with the trace, 0 when absent."""
    raw = trace.metadata.get(FEED_KEY, 0.0)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise DomainError(f"trace metadata {FEED_KEY} = {raw!r} is not a number")
    if not (np.isfinite(value) and value >= 0):
        raise DomainError(f"trace metadata {FEED_KEY} must be finite and >= 0, got {value!r}")
    return value


def _impedance_magnitude(trace: Trace) -> np.ndarray:
    s = trace.s11
    feed = feed_resistance(trace)
    with np.errstate(divide="ignore", invalid="ignore"):
        if feed == 0:
            return trace.reference_impedance * np.abs(1 + s) / np.abs(1 - s)
        return np.abs(trace.reference_impedance * (1 + s) / (1 - s) - feed)


def local_minima(values) -> np.ndarray:
    """Indices of interior local minima.

    A sample is a minimum when both neighbours are strictly larger. A flat run
    counts once, at its left edge, when the samples bounding the run are both
    larger. The first and last samples are never minima.
    """
    v = np.asarray(values, dtype=float)
    out = []
    n = v.size
    i = 1
    while i < n - 1:
        if v[i] < v[i - 1]:
            j = i
            while j + 1 < n and v[j + 1] == v[i]:
                j += 1
            if j + 1 < n and v[j + 1] > v[i]:
                out.append(i)
            i = j + 1
        else:
            i += 1
    return np.array(out, dtype=int)


def find_resonances(trace: Trace) -> list[Resonance]:
    """Local minima of |Z| (derived from S11), ascending in frequency.

    A feed resistance recorded in the trace metadata is de-embedded first.
    """
    if len(trace) < 3:
        raise DomainError("resonance search needs at least 3 samples")
    zmag = _impedance_magnitude(trace)
    return [Resonance(float(trace.frequencies[k]), float(zmag[k])) for k in local_minima(zmag)]


def lowest_resonance(trace: Trace) -> float:
    res = find_resonances(trace)
    if not res:
        raise DomainError("trace has no resonance (|Z| has no interior minimum)")
    return res[0].frequency


def _span(grid) -> tuple[float, float]:
    if isinstance(grid, FrequencyGrid):
        return grid.f_start, grid.f_stop
    if isinstance(grid, Trace):
        return float(grid.frequencies[0]), float(grid.frequencies[-1])
    lo, hi = grid
    return float(lo), float(hi)


def select_band(lowest_resonance: float, grid: Union[FrequencyGrid, Trace, tuple]) -> Band:
    """Band of total width 10 % centred on the resonance, clamped to the grid.

    Only a band that misses the grid entirely is an error, so a resonance just
    past the sweep end still yields a (clamped) band.
    """
    start, stop = _span(grid)
    half = 0.5 * BAND_FRACTION * lowest_resonance
    lo, hi = lowest_resonance - half, lowest_resonance + half
    if not lowest_resonance > 0 or hi < start or lo > stop:
        raise DomainError(f"resonance {lowest_resonance!r} Hz lies outside the grid [{start}, {stop}]")
    return Band(max(lo, start), min(hi, stop), float(lowest_resonance))


def full_band(grid: Union[FrequencyGrid, Trace, tuple]) -> Band:
    start, stop = _span(grid)
    return Band(start, stop, 0.5 * (start + stop))


def slice_to_band(trace: Trace, band: Band) -> Trace:
    mask = band.contains(trace.frequencies)
    if not mask.any():
        raise DomainError(f"band {band} does not overlap the trace")
    return trace.subset(mask)


def average_traces(traces: Sequence[Trace]) -> Trace:
    """Pointwise mean of complex S11 over traces sharing one grid."""
    traces = list(traces)
    if not traces:
        raise DomainError("nothing to average")
    first = traces[0]
    for t in traces[1:]:
        if t.reference_impedance != first.reference_impedance:
            raise DomainError("cannot average traces with different reference impedance")
        if not np.array_equal(t.frequencies, first.frequencies):
            raise DomainError("cannot average traces on different frequency grids")
    if len(traces) == 1:
        return first
    mean = np.mean(np.stack([t.s11 for t in traces]), axis=0)
    return first.with_s11(mean)
