"""Lumped-element PDN model and its input impedance over frequency.

The board's power-delivery network is a star: one series R-L feed from the
measurement port into a node where the plane branch and every decoupling
component hang in parallel. Each branch is a series RLC (ESR, ESL, C).
A PDN may be inductively coupled to one neighbouring PDN; the neighbour then
shows up at the port as a reflected impedance in series with the feed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import DomainError, ModelError, SingularityError

TWO_PI = 2.0 * math.pi

#: Bare-board plane defaults (overridable per PDN).
DEFAULT_PLANE_C = 1e-9
DEFAULT_PLANE_ESR = 0.1
DEFAULT_PLANE_ESL = 5e-9
DEFAULT_COUPLING_K = 0.05


@dataclass(frozen=True)
class ComponentSpec:
    """A physical capacitor: nominal capacitance plus its ESR and ESL."""

    id: str
    pdn: str
    capacitance: float
    esr: float = 0.0
    esl: float = 0.0

    def __post_init__(self):
        if not self.capacitance > 0:
            raise ModelError(f"{self.id}: capacitance must be > 0, got {self.capacitance!r}")
        if self.esr < 0 or self.esl < 0:
            raise ModelError(f"{self.id}: esr and esl must be >= 0")

    @property
    def resonance(self) -> float:
        """Series self-resonance in Hz (inf for an ideal, ESL-free part)."""
        if self.esl == 0:
            return math.inf
        return resonance_frequency(self.esl, self.capacitance)


@dataclass(frozen=True)
class Coupling:
    """Mutual inductive link to a peer PDN, ``M = k * sqrt(L_self * L_peer)``."""

    peer: "PdnModel"
    k: float = DEFAULT_COUPLING_K

    def __post_init__(self):
        if not 0 <= self.k < 1:
            raise ModelError(f"coupling coefficient must lie in [0, 1), got {self.k!r}")


@dataclass(frozen=True)
class PdnModel:
    name: str
    port_series_r: float = 0.0
    port_series_l: float = 0.0
    plane_capacitance: float = DEFAULT_PLANE_C
    plane_esr: float = DEFAULT_PLANE_ESR
    plane_esl: float = DEFAULT_PLANE_ESL
    components: tuple[ComponentSpec, ...] = field(default_factory=tuple)
    coupling: Optional[Coupling] = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.port_series_r < 0 or self.port_series_l < 0:
            raise ModelError(f"{self.name}: port parasitics must be >= 0")
        if self.plane_capacitance is None or not self.plane_capacitance > 0:
            raise ModelError(f"{self.name}: a PDN needs a plane branch with capacitance > 0")
        seen = set()
        for comp in self.components:
            if comp.id in seen:
                raise ModelError(f"{self.name}: duplicate component id {comp.id!r}")
            seen.add(comp.id)

    @property
    def plane(self) -> ComponentSpec:
        return ComponentSpec(f"{self.name}.plane", self.name, self.plane_capacitance,
                             self.plane_esr, self.plane_esl)

    @property
    def branches(self) -> tuple[ComponentSpec, ...]:
        """Plane branch first, then the component branches in order."""
        return (self.plane,) + self.components

    @property
    def is_bare(self) -> bool:
        return not self.components

    def component(self, comp_id: str) -> ComponentSpec:
        for comp in self.components:
            if comp.id == comp_id:
                return comp
        raise KeyError(comp_id)

    def with_components(self, components: Sequence[ComponentSpec]) -> "PdnModel":
        return replace(self, components=tuple(components))


@dataclass(frozen=True)
class FrequencyGrid:
    f_start: float = 1e6
    f_stop: float = 1e9
    points: int = 5000
    spacing: Literal["linear", "logarithmic"] = "linear"

    def __post_init__(self):
        if not self.f_start > 0:
            raise DomainError("f_start must be > 0")
        if not self.f_stop > self.f_start:
            raise DomainError("f_stop must exceed f_start")
        if int(self.points) != self.points or self.points < 2:
            raise DomainError("a grid needs at least 2 points")
        if self.spacing not in ("linear", "logarithmic"):
            raise DomainError(f"unknown spacing {self.spacing!r}")

    @property
    def frequencies(self) -> np.ndarray:
        if self.spacing == "linear":
            f = np.linspace(self.f_start, self.f_stop, int(self.points))
        else:
            f = np.geomspace(self.f_start, self.f_stop, int(self.points))
        f[0], f[-1] = self.f_start, self.f_stop
        return f

    @property
    def step(self) -> float:
        """Linear step; for log grids, the largest (last) step."""
        f = self.frequencies
        return float(f[-1] - f[-2])

    def contains(self, f: float) -> bool:
        return self.f_start <= f <= self.f_stop


def _as_freq(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if np.any(~(f > 0)):
        raise DomainError("frequency must be > 0")
    return f


def branch_impedance(spec: ComponentSpec, f):
    """``ESR + j*w*ESL + 1/(j*w*C)`` at frequency ``f`` (scalar or array)."""
    fa = _as_freq(f)
    w = TWO_PI * fa
    z = spec.esr + 1j * (w * spec.esl - 1.0 / (w * spec.capacitance))
    return complex(z) if np.ndim(f) == 0 else z


def resonance_frequency(l: float, c: float) -> float:
    if not (l > 0 and c > 0):
        raise DomainError(f"resonance needs l > 0 and c > 0, got l={l!r}, c={c!r}")
    return 1.0 / (TWO_PI * math.sqrt(l * c))


def loop_inductance(model: PdnModel) -> float:
    """Inductance seen at the port with every capacitor shorted.

    Feed inductance plus the parallel combination of all branch ESLs; used to
    size the mutual inductance between coupled PDNs.
    """
    esls = [b.esl for b in model.branches]
    if min(esls) == 0:
        parallel = 0.0
    else:
        parallel = 1.0 / sum(1.0 / l for l in esls)
    return model.port_series_l + parallel


def mutual_inductance(model: PdnModel) -> float:
    if model.coupling is None:
        return 0.0
    c = model.coupling
    return c.k * math.sqrt(loop_inductance(model) * loop_inductance(c.peer))


def coupled_reflected_impedance(m: float, z_peer, f):
    """Series impedance ``(w*m)**2 / z_peer`` that a coupled loop reflects to the port."""
    fa = _as_freq(f)
    zp = np.asarray(z_peer, dtype=complex)
    if np.any(zp == 0):
        raise SingularityError("peer loop impedance is zero: reflected impedance is singular")
    z = (TWO_PI * fa * m) ** 2 / zp
    return complex(z) if np.ndim(z) == 0 else z


def _frequencies(grid) -> np.ndarray:
    if isinstance(grid, FrequencyGrid):
        return grid.frequencies
    return _as_freq(np.atleast_1d(grid))


def _uncoupled_impedance(model: PdnModel, f: np.ndarray) -> np.ndarray:
    admittance = np.zeros(f.shape, dtype=complex)
    for branch in model.branches:
        admittance += 1.0 / branch_impedance(branch, f)
    w = TWO_PI * f
    return model.port_series_r + 1j * w * model.port_series_l + 1.0 / admittance


def network_impedance(model: PdnModel, grid) -> np.ndarray:
    """Complex input impedance of ``model`` at every frequency of ``grid``.

    ``grid`` is a :class:`FrequencyGrid` or an array of frequencies in Hz. The
    peer of a coupled model is evaluated without its own coupling.
    """
    if not model.branches:
        raise ModelError(f"{model.name}: no branches")
    f = _frequencies(grid)
    z = _uncoupled_impedance(model, f)
    if model.coupling is not None and model.coupling.k > 0:
        m = mutual_inductance(model)
        z_peer = _uncoupled_impedance(model.coupling.peer, f)
        z = z + coupled_reflected_impedance(m, z_peer, f)
    return z
