"""Golden-free verification: simulate the golden trace, pick a band, DTW, threshold.

A board under test is compared against a golden |S11| signature computed from
its design data instead of a trusted physical sample. Scores below the
threshold pass as genuine; anything else is reported as dissimilar.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Optional, Sequence, Union

import numpy as np

from .analysis import FEED_KEY, Band, full_band, lowest_resonance, select_band, slice_to_band
from .circuit import FrequencyGrid, PdnModel, network_impedance
from .dtw import DtwConfig, dtw_score
from .errors import ConfigurationError, DomainError
from .sparams import DEFAULT_Z0, Trace, magnitude, z_to_s11

GENUINE = "genuine"
DISSIMILAR = "dissimilar"

BandSpec = Union[Literal["auto", "full"], Band]


@dataclass(frozen=True)
class Verdict:
    dtw_score: float
    threshold: float
    band: Band
    decision: str
    samples_compared: int

    @property
    def genuine(self) -> bool:
        return self.decision == GENUINE


@dataclass(frozen=True)
class MarginReport:
    genuine_score: float
    min_score: float
    eta: float


class Comparison(NamedTuple):
    score: float
    band: Band
    samples: int


def build_golden(model: PdnModel, grid: FrequencyGrid, z0: float = DEFAULT_Z0,
                 label: Optional[str] = None) -> Trace:
    """Simulated S11 of ``model`` over ``grid``; this is the golden signature."""
    z = network_impedance(model, grid)
    meta = {"pdn": model.name, "components": str(len(model.components))}
    if model.port_series_r:
        meta[FEED_KEY] = repr(float(model.port_series_r))
    return Trace(grid.frequencies, z_to_s11(z, z0), z0,
                 model.name if label is None else label, meta)


def is_bare_trace(trace: Trace) -> bool:
    return str(trace.metadata.get("components", "")).strip() == "0"


def resolve_band(golden: Trace, band: BandSpec = "auto") -> Band:
    """``auto``: 10 % around the lowest resonance, or the full sweep for a bare board."""
    if isinstance(band, Band):
        return band
    if band == "full" or (band == "auto" and is_bare_trace(golden)):
        return full_band(golden)
    if band == "auto":
        return select_band(lowest_resonance(golden), golden)
    raise ConfigurationError(f"unknown band specification {band!r}")


def _resample(trace: Trace, f: np.ndarray) -> np.ndarray:
    if trace.frequencies.shape == f.shape and np.array_equal(trace.frequencies, f):
        return trace.s11
    re = np.interp(f, trace.frequencies, trace.s11.real)
    im = np.interp(f, trace.frequencies, trace.s11.imag)
    return re + 1j * im


def compare(golden: Trace, measured: Trace, cfg: Optional[DtwConfig] = None,
            band: BandSpec = "auto") -> Comparison:
    """DTW score between golden and measured |S11| inside the comparison band.

    The measured trace is linearly interpolated (complex) onto the golden
    frequencies of the band; golden samples outside the measured sweep are
    dropped.
    """
    used = resolve_band(golden, band)
    ref = slice_to_band(golden, used)
    lo, hi = measured.frequencies[0], measured.frequencies[-1]
    keep = (ref.frequencies >= lo) & (ref.frequencies <= hi)
    if not keep.any():
        raise DomainError(f"measured sweep [{lo}, {hi}] Hz does not overlap band {used}")
    ref = ref.subset(keep)
    test = _resample(measured, ref.frequencies)
    cfg = DtwConfig() if cfg is None else cfg
    score = dtw_score(magnitude(ref, cfg.scale), magnitude(test, cfg.scale), cfg)
    return Comparison(score, used, len(ref))


def classify(score: float, threshold: float) -> str:
    if not threshold > 0:
        raise ConfigurationError(f"threshold must be > 0, got {threshold!r}")
    return GENUINE if score < threshold else DISSIMILAR


def verify(golden: Trace, measured: Trace, threshold: float,
           cfg: Optional[DtwConfig] = None, band: BandSpec = "auto") -> Verdict:
    score, used, n = compare(golden, measured, cfg, band)
    return Verdict(score, threshold, used, classify(score, threshold), n)


def margin_factor(genuine_score: float, all_scores: Sequence[float]) -> MarginReport:
    """Gap between the genuine score and the smallest score observed; ideally 0."""
    scores = list(all_scores)
    if not scores:
        raise DomainError("margin factor needs at least one score")
    lowest = min(min(scores), genuine_score)
    return MarginReport(genuine_score, lowest, genuine_score - lowest)


def cross_table(goldens: Sequence[Trace], measured: Sequence[Trace],
                cfg: Optional[DtwConfig] = None,
                bands: Optional[Sequence[BandSpec]] = None) -> np.ndarray:
    """``table[i, j]`` = score of measured ``i`` against golden ``j``."""
    if not goldens or not measured:
        raise DomainError("cross table needs at least one golden and one measured trace")
    if bands is None:
        bands = ["auto"] * len(goldens)
    resolved = [resolve_band(g, b) for g, b in zip(goldens, bands)]
    table = np.empty((len(measured), len(goldens)))
    for i, m in enumerate(measured):
        for j, g in enumerate(goldens):
            table[i, j] = compare(g, m, cfg, resolved[j]).score
    return table


def row_margins(table: np.ndarray) -> list[MarginReport]:
    return [margin_factor(table[i, i], table[i]) for i in range(min(table.shape))]


def suggest_threshold(genuine_scores: Sequence[float], tampered_scores: Sequence[float]) -> float:
    """Geometric mean of the worst genuine and the best tampered score."""
    hi = max(genuine_scores)
    lo = min(tampered_scores)
    if hi <= 0 or lo <= 0:
        raise DomainError("threshold suggestion needs positive scores")
    return math.sqrt(hi * lo)
