"""Impedance <-> reflection coefficient conversion, S11 traces, one-port Touchstone."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from .errors import DomainError, ParseError, SingularityError

DEFAULT_Z0 = 50.0
#: Magnitude reported for an exact zero on the dB scale.
DB_FLOOR = -300.0

FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
FORMATS = ("RI", "MA", "DB")


@dataclass(frozen=True)
class Trace:
    """Frequency-indexed complex S11 samples."""

    frequencies: np.ndarray
    s11: np.ndarray
    reference_impedance: float = DEFAULT_Z0
    label: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        f = np.array(self.frequencies, dtype=float)
        s = np.array(self.s11, dtype=complex)
        if f.ndim != 1 or s.shape != f.shape:
            raise DomainError(f"frequencies and s11 must be 1-D of equal length "
                              f"({f.shape} vs {s.shape})")
        if f.size == 0:
            raise DomainError("a trace needs at least one sample")
        if f.size > 1 and not np.all(np.diff(f) > 0):
            raise DomainError("frequencies must be strictly increasing")
        if not self.reference_impedance > 0:
            raise DomainError("reference impedance must be > 0")
        f.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "s11", s)

    def __len__(self):
        return self.frequencies.size

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (np.array_equal(self.frequencies, other.frequencies)
                and np.array_equal(self.s11, other.s11)
                and self.reference_impedance == other.reference_impedance
                and self.label == other.label)

    __hash__ = None

    @property
    def impedance(self) -> np.ndarray:
        return s11_to_z(self.s11, self.reference_impedance)

    def with_s11(self, s11, label=None) -> "Trace":
        return Trace(self.frequencies, s11, self.reference_impedance,
                     self.label if label is None else label, dict(self.metadata))

    def subset(self, mask) -> "Trace":
        return Trace(self.frequencies[mask], self.s11[mask], self.reference_impedance,
                     self.label, dict(self.metadata))


def z_to_s11(z, z0: float = DEFAULT_Z0):
    """Reflection coefficient ``(z - z0) / (z + z0)``."""
    if not z0 > 0:
        raise DomainError("z0 must be > 0")
    za = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(za)):
        raise DomainError("impedance must be finite")
    den = za + z0
    if np.any(den == 0):
        raise SingularityError("z = -z0 has no reflection coefficient")
    s = (za - z0) / den
    return complex(s) if s.ndim == 0 else s


def s11_to_z(s11, z0: float = DEFAULT_Z0):
    """Impedance ``z0 * (1 + s11) / (1 - s11)``."""
    if not z0 > 0:
        raise DomainError("z0 must be > 0")
    sa = np.asarray(s11, dtype=complex)
    den = 1.0 - sa
    if np.any(np.abs(den) <= 1e-12):
        raise SingularityError("s11 = 1 is an open circuit (infinite impedance)")
    z = z0 * (1.0 + sa) / den
    return complex(z) if z.ndim == 0 else z


def magnitude(trace: Union[Trace, np.ndarray], scale: Literal["linear", "decibel"] = "linear"):
    s = trace.s11 if isinstance(trace, Trace) else np.asarray(trace, dtype=complex)
    mag = np.abs(s)
    if scale == "linear":
        return mag
    if scale == "decibel":
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mag)
        return np.where(mag == 0, DB_FLOOR, np.maximum(db, DB_FLOOR))
    raise DomainError(f"unknown scale {scale!r}")


# -- Touchstone v1, one port -------------------------------------------------

def _decode(fmt, a, b):
    if fmt == "RI":
        return complex(a, b)
    mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
    return mag * np.exp(1j * np.deg2rad(b))


def read_touchstone(content: Union[bytes, str, io.IOBase]) -> Trace:
    """Parse a one-port Touchstone v1 file into a :class:`Trace`."""
    if hasattr(content, "read"):
        content = content.read()
    if isinstance(content, bytes):
        content = content.decode("utf-8", errors="replace")

    unit = fmt = None
    z0 = DEFAULT_Z0
    freqs, values = [], []
    label = ""
    metadata = {}
    option_line = None
    for lineno, raw in enumerate(content.splitlines(), start=1):
        text, _, comment = raw.partition("!")
        if option_line is None and ":" in comment:
            key, _, value = comment.partition(":")
            key = key.strip().lower()
            if key == "label":
                label = value.strip()
            elif key.isidentifier():
                metadata[key] = value.strip()
        text = text.strip()
        if not text:
            continue
        if text.startswith("#"):
            if option_line is not None:
                raise ParseError("duplicate option line", lineno)
            option_line = lineno
            tokens = text[1:].upper().split()
            unit, fmt, param = "GHZ", "MA", "S"
            it = iter(range(len(tokens)))
            for i in it:
                tok = tokens[i]
                if tok in FREQ_UNITS:
                    unit = tok
                elif tok in FORMATS:
                    fmt = tok
                elif tok in ("S", "Y", "Z", "G", "H"):
                    param = tok
                elif tok == "R":
                    try:
                        z0 = float(tokens[i + 1])
                        next(it)
                    except (IndexError, ValueError):
                        raise ParseError("option 'R' needs a numeric reference impedance", lineno)
                else:
                    raise ParseError(f"unknown option token {tok!r}", lineno)
            if param != "S":
                raise ParseError(f"only S parameters are supported, got {param}", lineno)
            if not z0 > 0:
                raise ParseError("reference impedance must be > 0", lineno)
            continue
        if option_line is None:
            raise ParseError("data before option line ('# <unit> S <format> R <z0>')", lineno)
        cols = text.split()
        if len(cols) != 3:
            kind = "multi-port data is not supported" if len(cols) > 3 else "wrong column count"
            raise ParseError(f"{kind}: expected 3 columns, got {len(cols)}", lineno)
        try:
            f, a, b = (float(c) for c in cols)
        except ValueError:
            raise ParseError(f"non-numeric value in {text!r}", lineno)
        f *= FREQ_UNITS[unit]
        if freqs and not f > freqs[-1]:
            raise ParseError("frequencies must be strictly increasing", lineno)
        freqs.append(f)
        values.append(_decode(fmt, a, b))

    if option_line is None:
        raise ParseError("missing option line")
    if not freqs:
        raise ParseError("no data rows")
    return Trace(np.array(freqs), np.array(values, dtype=complex), z0, label, metadata)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_touchstone(trace: Trace, format: str = "RI", unit: str = "HZ") -> bytes:
    """Serialise ``trace`` as one-port Touchstone v1; output is deterministic."""
    fmt, unit = format.upper(), unit.upper()
    if fmt not in FORMATS:
        raise DomainError(f"unknown format {format!r}")
    if unit not in FREQ_UNITS:
        raise DomainError(f"unknown frequency unit {unit!r}")
    scale = FREQ_UNITS[unit]
    lines = [f"! label: {trace.label}"]
    for key in sorted(trace.metadata):
        lines.append(f"! {key}: {trace.metadata[key]}")
    lines.append(f"# {unit} S {fmt} R {_fmt(trace.reference_impedance)}")
    s = trace.s11
    if fmt == "RI":
        a, b = s.real, s.imag
    else:
        mag = np.abs(s)
        b = np.rad2deg(np.angle(s))
        if fmt == "MA":
            a = mag
        else:
            with np.errstate(divide="ignore"):
                a = np.where(mag == 0, DB_FLOOR, 20.0 * np.log10(mag))
    for f, x, y in zip(trace.frequencies / scale, a, b):
        lines.append(f"{_fmt(f)} {_fmt(x)} {_fmt(y)}")
    return ("\n".join(lines) + "\n").encode("ascii")


def load_trace(path) -> Trace:
    with open(path, "rb") as fh:
        return read_touchstone(fh.read())


def save_trace(trace: Trace, path, format: str = "RI", unit: str = "HZ") -> None:
    with open(path, "wb") as fh:
        fh.write(write_touchstone(trace, format, unit))
