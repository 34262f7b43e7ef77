"""Synthetic boards: tampering, counterfeit parts and process-varied measurements.

These stand in for physical boards and a VNA. A synthesized measurement is the
simulated trace of a perturbed copy of the model, shifted in frequency and
with noise added to its dB magnitude.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.stats import truncnorm

from .analysis import FEED_KEY, Band
from .circuit import ComponentSpec, Coupling, FrequencyGrid, PdnModel, network_impedance
from .dtw import DtwConfig
from .errors import DomainError, ModelError
from .sparams import DEFAULT_Z0, Trace, z_to_s11
from .verify import (DISSIMILAR, MarginReport, build_golden, classify, compare, cross_table,
                     resolve_band, row_margins)

COUNTERFEIT_ESL_FACTOR = 10.0
COUNTERFEIT_ESR_FACTOR = 1.3
TRUNCATE_SIGMAS = 3.0


@dataclass(frozen=True)
class VariationSpec:
    sigma_c: float = 0.05
    sigma_esl: float = 0.10
    sigma_esr: float = 0.10
    noise_db: float = 0.1
    freq_shift_frac: float = 0.02
    seed: Union[int, Sequence[int], None] = 0

    def __post_init__(self):
        if min(self.sigma_c, self.sigma_esl, self.sigma_esr, self.noise_db) < 0:
            raise DomainError("variation widths must be >= 0")
        if not 0 <= self.freq_shift_frac <= 0.1:
            raise DomainError("freq_shift_frac must lie in [0, 0.1]")

    @classmethod
    def none(cls, seed=0) -> "VariationSpec":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, seed)


@dataclass(frozen=True)
class AddComponent:
    component: ComponentSpec


@dataclass(frozen=True)
class RemoveComponent:
    id: str


TamperAction = Union[AddComponent, RemoveComponent]


def _owner(model: PdnModel, pdn: str) -> str:
    if pdn == model.name:
        return "self"
    if model.coupling is not None and model.coupling.peer.name == pdn:
        return "peer"
    raise ModelError(f"PDN {pdn!r} is neither {model.name!r} nor its coupled peer")


def _with_peer(model: PdnModel, peer: PdnModel) -> PdnModel:
    return replace(model, coupling=Coupling(peer, model.coupling.k))


def all_components(model: PdnModel) -> list[ComponentSpec]:
    comps = list(model.components)
    if model.coupling is not None:
        comps += list(model.coupling.peer.components)
    return comps


def apply_tamper(model: PdnModel, action: TamperAction) -> PdnModel:
    """Add or remove a part on the probed PDN or on its coupled peer."""
    ids = {c.id for c in all_components(model)}
    if isinstance(action, AddComponent):
        comp = action.component
        if comp.id in ids:
            raise ModelError(f"component id {comp.id!r} already present")
        if _owner(model, comp.pdn) == "self":
            return model.with_components(model.components + (comp,))
        peer = model.coupling.peer
        return _with_peer(model, peer.with_components(peer.components + (comp,)))
    if isinstance(action, RemoveComponent):
        if action.id not in ids:
            raise ModelError(f"unknown component id {action.id!r}")
        if any(c.id == action.id for c in model.components):
            return model.with_components(c for c in model.components if c.id != action.id)
        peer = model.coupling.peer
        return _with_peer(model, peer.with_components(
            c for c in peer.components if c.id != action.id))
    raise TypeError(f"not a tamper action: {action!r}")


def _map_components(model: PdnModel, fn) -> PdnModel:
    out = model.with_components(fn(c) for c in model.components)
    if model.coupling is not None:
        peer = model.coupling.peer
        out = _with_peer(out, peer.with_components(fn(c) for c in peer.components))
    return out


def apply_counterfeit(model: PdnModel, targets: Iterable[str],
                      esl_factor: float = COUNTERFEIT_ESL_FACTOR,
                      esr_factor: float = COUNTERFEIT_ESR_FACTOR) -> PdnModel:
    """Scale ESL and ESR of the targeted parts; capacitance is untouched."""
    if not (esl_factor > 0 and esr_factor > 0):
        raise DomainError("counterfeit factors must be > 0")
    targets = set(targets)
    missing = targets - {c.id for c in all_components(model)}
    if missing:
        raise ModelError(f"unknown component id(s): {', '.join(sorted(missing))}")

    def fake(c):
        if c.id not in targets:
            return c
        return replace(c, esl=c.esl * esl_factor, esr=c.esr * esr_factor)

    return _map_components(model, fake)


def _factors(rng, sigma, size):
    if sigma == 0:
        return np.ones(size)
    eps = truncnorm.rvs(-TRUNCATE_SIGMAS, TRUNCATE_SIGMAS, size=size, random_state=rng)
    return 1.0 + sigma * eps


def perturb(model: PdnModel, var: VariationSpec, rng: np.random.Generator) -> PdnModel:
    """Multiply every part's C, ESL, ESR by (1 + eps), eps truncated at 3 sigma."""
    if var.sigma_c == var.sigma_esl == var.sigma_esr == 0:
        return model
    comps = all_components(model)
    n = len(comps)
    fc = _factors(rng, var.sigma_c, n)
    fl = _factors(rng, var.sigma_esl, n)
    fr = _factors(rng, var.sigma_esr, n)
    new = {}
    for k, c in enumerate(comps):
        new[c.id] = ComponentSpec(c.id, c.pdn, c.capacitance * fc[k], c.esr * fr[k], c.esl * fl[k])
    return _map_components(model, lambda c: new[c.id])


def synthesize_measurement(model: PdnModel, grid: FrequencyGrid, z0: float = DEFAULT_Z0,
                           var: Optional[VariationSpec] = None,
                           label: Optional[str] = None) -> Trace:
    """A plausible VNA trace of a real board built to ``model``.

    Deterministic for a given ``var.seed``. With every width at zero the result
    equals :func:`~pdnverify.verify.build_golden` bit for bit.
    """
    var = VariationSpec() if var is None else var
    rng = np.random.default_rng(var.seed)
    board = perturb(model, var, rng)
    f = grid.frequencies
    f_eval = f
    if var.freq_shift_frac > 0:
        shift = rng.uniform(-var.freq_shift_frac, var.freq_shift_frac)
        # a feature at f0 in the simulation appears at f0 * (1 + shift)
        f_eval = f / (1.0 + shift)
    s11 = z_to_s11(network_impedance(board, f_eval), z0)
    if var.noise_db > 0:
        s11 = s11 * 10.0 ** (rng.normal(0.0, var.noise_db, size=s11.shape) / 20.0)
    meta = {"pdn": model.name, "components": str(len(model.components)),
            "seed": str(var.seed), "synthetic": "true"}
    if model.port_series_r:
        meta[FEED_KEY] = repr(float(model.port_series_r))
    return Trace(f, s11, z0, model.name if label is None else label, meta)


@dataclass(frozen=True)
class Configuration:
    """A named board population: parts added to the bare base model."""

    name: str
    components: tuple[ComponentSpec, ...] = ()

    def build(self, base: PdnModel) -> PdnModel:
        model = base
        for comp in self.components:
            model = apply_tamper(model, AddComponent(comp))
        return model


@dataclass
class SuiteResult:
    names: list[str]
    table: np.ndarray
    margins: list[MarginReport]
    bands: list[Band]
    seed: object = None
    counterfeit: Optional[np.ndarray] = field(default=None)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.table).copy()

    def diagonal_is_row_minimum(self) -> np.ndarray:
        out = []
        for i, row in enumerate(self.table):
            others = np.delete(row, i)
            out.append(bool(np.all(row[i] < others)))
        return np.array(out)

    def separation_ratios(self) -> np.ndarray:
        """Per row: median off-diagonal score over the diagonal score."""
        out = []
        for i, row in enumerate(self.table):
            off = np.median(np.delete(row, i))
            out.append(np.inf if row[i] == 0 else off / row[i])
        return np.array(out)


def _seed_for(var: VariationSpec, index: int):
    seed = var.seed
    if seed is None:
        seed = 0
    if isinstance(seed, (int, np.integer)):
        return (int(seed), index)
    return tuple(seed) + (index,)


def run_experiment_suite(base: PdnModel, configurations: Sequence[Configuration],
                         var: Optional[VariationSpec] = None,
                         cfg: Optional[DtwConfig] = None,
                         grid: Optional[FrequencyGrid] = None,
                         z0: float = DEFAULT_Z0,
                         counterfeit: Optional[tuple[float, float]] = None) -> SuiteResult:
    """Cross table of every configuration's golden against every synthesized board.

    Measurement ``i`` is drawn with seed ``(var.seed, i)``. With ``counterfeit``
    set to ``(esl_factor, esr_factor)`` each populated configuration is also
    measured with counterfeit parts on the probed PDN (same random stream) and
    scored against its own golden; bare configurations get NaN.
    """
    if len(configurations) < 2:
        raise DomainError("an experiment suite needs at least two configurations")
    var = VariationSpec() if var is None else var
    grid = FrequencyGrid() if grid is None else grid
    models = [c.build(base) for c in configurations]
    goldens = [build_golden(m, grid, z0, c.name) for m, c in zip(models, configurations)]
    bands = [resolve_band(g) for g in goldens]
    measured = [
        synthesize_measurement(m, grid, z0, replace(var, seed=_seed_for(var, i)), c.name)
        for i, (m, c) in enumerate(zip(models, configurations))
    ]
    table = cross_table(goldens, measured, cfg, bands)
    fake_scores = None
    if counterfeit is not None:
        esl_factor, esr_factor = counterfeit
        fake_scores = np.full(len(models), np.nan)
        for i, m in enumerate(models):
            if m.is_bare:
                continue
            fake = apply_counterfeit(m, [c.id for c in m.components], esl_factor, esr_factor)
            trace = synthesize_measurement(fake, grid, z0, replace(var, seed=_seed_for(var, i)))
            fake_scores[i] = compare(goldens[i], trace, cfg, bands[i]).score
    return SuiteResult([c.name for c in configurations], table, row_margins(table), bands,
                       var.seed, fake_scores)


def counterfeit_detected(result: SuiteResult, threshold: float) -> list[bool]:
    return [classify(s, threshold) == DISSIMILAR for s in result.counterfeit if np.isfinite(s)]
