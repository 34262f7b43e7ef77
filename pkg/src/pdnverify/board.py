"""Board description files: PDNs, parts, populations and sweep defaults in TOML.

A board file looks like::

    [board]
    name = "demo"
    z0 = "50ohm"
    probe = "1V8"

    [sweep]
    f_start = "1MHz"
    f_stop = "1GHz"
    points = 5000
    spacing = "linear"

    [pdn.1V8]
    port_r = "0ohm"
    port_l = "1nH"
    plane_c = "1nF"
    plane_esr = "100mohm"
    plane_esl = "5nH"
    coupling = { peer = "3V3", k = 0.05 }

    [pdn.3V3]

    [component.C19]
    pdn = "1V8"
    value = "10uF"
    esr = "5mohm"
    esl = "3nH"

    [config.populated]
    components = ["C19"]

Quantities are strings with a unit suffix or plain numbers in SI units.
Unknown keys are rejected. Every error names the section and, when it can be
found in the source text, the line.
"""
from __future__ import annotations

import math
import re
from decimal import Decimal
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import tomli_w

from .circuit import (DEFAULT_COUPLING_K, DEFAULT_PLANE_C, DEFAULT_PLANE_ESL, DEFAULT_PLANE_ESR,
                      ComponentSpec, Coupling, FrequencyGrid, PdnModel)
from .emulate import Configuration
from .errors import ModelError, ParseError, PdnVerifyError
from .sparams import DEFAULT_Z0

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# Decimal exponents, so that "3.58mohm" parses to the float nearest 3.58e-3.
PREFIXES = {"p": -12, "n": -9, "u": -6, "µ": -6, "μ": -6, "m": -3,
            "": 0, "k": 3, "M": 6, "G": 9}
UNITS = {"F": "F", "H": "H", "ohm": "ohm", "Ω": "ohm", "Hz": "Hz"}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*"
                       r"([pnuµμmkMG]?)(F|H|ohm|Ω|Hz)?\s*$", re.IGNORECASE)

# Prefixes tried when writing a value back out, largest first.
_OUT_PREFIX = {"F": "pnum", "H": "pnum", "ohm": "mk", "Hz": "kMG"}


def parse_quantity(text, unit: str) -> float:
    """``"10uF"`` -> 1e-05. Plain numbers are taken as SI base units."""
    if isinstance(text, bool):
        raise ValueError(f"expected a quantity in {unit}, got {text!r}")
    if isinstance(text, (int, float)):
        return float(text)
    m = _QUANTITY.match(str(text))
    if not m:
        raise ValueError(f"cannot parse {text!r} as a quantity in {unit}")
    number, prefix, suffix = m.groups()
    if suffix is None:
        if prefix:
            raise ValueError(f"{text!r}: prefix {prefix!r} without unit {unit}")
    else:
        canon = next((v for k, v in UNITS.items() if k.lower() == suffix.lower()), None)
        if canon != unit:
            raise ValueError(f"{text!r}: expected unit {unit}, got {suffix}")
        if prefix not in PREFIXES:
            # the case-insensitive match may have let "K" or "g" through
            raise ValueError(f"{text!r}: unknown prefix {prefix!r}")
    return float(Decimal(number).scaleb(PREFIXES[prefix]))


def format_quantity(value: float, unit: str) -> str:
    """Shortest readable form that parses back to exactly ``value``."""
    if value == 0:
        return f"0{unit}"
    ladder = sorted(list(_OUT_PREFIX[unit]) + [""], key=PREFIXES.get, reverse=True)
    prefix = next((p for p in ladder if abs(value) >= 10.0 ** PREFIXES[p]), ladder[-1])
    for digits in (6, 10, 15, 17):
        scaled = Decimal(repr(float(value))).scaleb(-PREFIXES[prefix])
        text = f"{float(scaled):.{digits}g}{prefix}{unit}"
        if parse_quantity(text, unit) == value:
            return text
    return repr(float(value))


@dataclass(frozen=True)
class PdnSection:
    name: str
    port_r: float = 0.0
    port_l: float = 0.0
    plane_c: float = DEFAULT_PLANE_C
    plane_esr: float = DEFAULT_PLANE_ESR
    plane_esl: float = DEFAULT_PLANE_ESL
    peer: Optional[str] = None
    k: float = DEFAULT_COUPLING_K


@dataclass(frozen=True)
class BoardDescription:
    name: str
    pdns: dict
    components: tuple = ()
    configs: dict = field(default_factory=dict)
    sweep: FrequencyGrid = field(default_factory=FrequencyGrid)
    z0: float = DEFAULT_Z0
    probe: Optional[str] = None

    def component(self, comp_id: str) -> ComponentSpec:
        for c in self.components:
            if c.id == comp_id:
                return c
        raise ModelError(f"unknown component id {comp_id!r}")

    @property
    def default_pdn(self) -> str:
        return self.probe if self.probe is not None else next(iter(self.pdns))

    def bare_model(self, pdn: Optional[str] = None) -> PdnModel:
        """The PDN with its plane only, coupled to an equally bare peer."""
        pdn = self.default_pdn if pdn is None else pdn
        if pdn not in self.pdns:
            raise ModelError(f"board {self.name!r} has no PDN {pdn!r}")
        sec = self.pdns[pdn]
        coupling = None
        if sec.peer is not None:
            coupling = Coupling(self._plain(self.pdns[sec.peer]), sec.k)
        return replace(self._plain(sec), coupling=coupling)

    @staticmethod
    def _plain(sec: PdnSection) -> PdnModel:
        return PdnModel(sec.name, sec.port_r, sec.port_l, sec.plane_c, sec.plane_esr, sec.plane_esl)

    def configuration(self, name: Optional[str] = None) -> Configuration:
        """Named population; ``None`` means every part on the board."""
        if name is None:
            return Configuration("all", tuple(self.components))
        if name not in self.configs:
            raise ModelError(f"board {self.name!r} has no configuration {name!r}")
        return Configuration(name, tuple(self.component(i) for i in self.configs[name]))

    def configurations(self, names=None) -> list[Configuration]:
        names = list(self.configs) if names is None else list(names)
        return [self.configuration(n) for n in names]

    def model_for(self, pdn: Optional[str] = None, config: Optional[str] = None) -> PdnModel:
        """Probed PDN populated per ``config``; parts on other PDNs than the
        probed one and its peer are ignored."""
        base = self.bare_model(pdn)
        keep = {base.name}
        if base.coupling is not None:
            keep.add(base.coupling.peer.name)
        parts = tuple(c for c in self.configuration(config).components if c.pdn in keep)
        return Configuration(config or "all", parts).build(base)


# -- parsing ----------------------------------------------------------------

_SECTION_KEYS = {
    "board": {"name", "z0", "probe"},
    "sweep": {"f_start", "f_stop", "points", "spacing"},
    "pdn": {"port_r", "port_l", "plane_c", "plane_esr", "plane_esl", "coupling"},
    "component": {"pdn", "value", "esr", "esl"},
    "config": {"components"},
}


class _Locator:
    """Maps (section, key) to a 1-based source line by scanning the text."""

    _HEADER = re.compile(r"^\s*\[\s*([^\[\]]+?)\s*\]\s*(?:#.*)?$")

    def __init__(self, text: str):
        self.headers = {}
        self.lines = text.splitlines()
        for n, line in enumerate(self.lines, start=1):
            m = self._HEADER.match(line)
            if m:
                name = ".".join(p.strip().strip('"\'') for p in m.group(1).split("."))
                self.headers.setdefault(name, n)

    def line(self, section: str, key: Optional[str] = None) -> Optional[int]:
        start = self.headers.get(section)
        if start is None or key is None:
            return start
        pat = re.compile(r"^\s*[\"']?" + re.escape(key) + r"[\"']?\s*=")
        for n in range(start, len(self.lines)):
            text = self.lines[n]
            if self._HEADER.match(text):
                break
            if pat.match(text):
                return n + 1
        return start


class _Reader:
    def __init__(self, text: str):
        self.loc = _Locator(text)

    def fail(self, msg, section, key=None):
        raise ParseError(msg, self.loc.line(section, key), section)

    def table(self, value, section):
        if not isinstance(value, dict):
            self.fail("expected a table", section)
        return value

    def check_keys(self, table, kind, section):
        for key in table:
            if key not in _SECTION_KEYS[kind]:
                allowed = ", ".join(sorted(_SECTION_KEYS[kind]))
                self.fail(f"unknown key {key!r} (allowed: {allowed})", section, key)

    def quantity(self, table, key, unit, section, default=None, required=False):
        if key not in table:
            if required:
                self.fail(f"missing required key {key!r}", section)
            return default
        try:
            return parse_quantity(table[key], unit)
        except ValueError as exc:
            self.fail(str(exc), section, key)

    def string(self, table, key, section, required=False, default=None):
        if key not in table:
            if required:
                self.fail(f"missing required key {key!r}", section)
            return default
        if not isinstance(table[key], str):
            self.fail(f"{key!r} must be a string", section, key)
        return table[key]


def parse_board(content) -> BoardDescription:
    """Parse and validate a board file given as bytes, str or a binary file."""
    if hasattr(content, "read"):
        content = content.read()
    if isinstance(content, bytes):
        try:
            content = content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"board file is not UTF-8: {exc}")
    try:
        doc = tomllib.loads(content)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"invalid TOML: {exc}", int(m.group(1)) if m else None)
    r = _Reader(content)

    for key in doc:
        if key not in _SECTION_KEYS:
            r.fail(f"unknown section (allowed: {', '.join(sorted(_SECTION_KEYS))})", key)

    if "board" not in doc:
        raise ParseError("missing [board] section")
    head = r.table(doc["board"], "board")
    r.check_keys(head, "board", "board")
    name = r.string(head, "name", "board", required=True)
    z0 = r.quantity(head, "z0", "ohm", "board", DEFAULT_Z0)
    if not z0 > 0:
        r.fail("z0 must be > 0", "board", "z0")
    probe = r.string(head, "probe", "board")

    sw = r.table(doc.get("sweep", {}), "sweep")
    r.check_keys(sw, "sweep", "sweep")
    defaults = FrequencyGrid()
    points = sw.get("points", defaults.points)
    if isinstance(points, bool) or not isinstance(points, int):
        r.fail("'points' must be an integer", "sweep", "points")
    try:
        sweep = FrequencyGrid(r.quantity(sw, "f_start", "Hz", "sweep", defaults.f_start),
                              r.quantity(sw, "f_stop", "Hz", "sweep", defaults.f_stop),
                              points, r.string(sw, "spacing", "sweep", default=defaults.spacing))
    except PdnVerifyError as exc:
        r.fail(str(exc), "sweep")

    pdns = {}
    raw_pdns = r.table(doc.get("pdn", {}), "pdn")
    if not raw_pdns:
        raise ParseError("a board needs at least one [pdn.NAME] section")
    for pname, body in raw_pdns.items():
        sec = f"pdn.{pname}"
        body = r.table(body, sec)
        r.check_keys(body, "pdn", sec)
        peer, k = None, DEFAULT_COUPLING_K
        if "coupling" in body:
            cp = body["coupling"]
            if not isinstance(cp, dict) or set(cp) - {"peer", "k"} or "peer" not in cp:
                r.fail("coupling must be { peer = \"NAME\", k = 0.05 }", sec, "coupling")
            peer = cp["peer"]
            k = cp.get("k", DEFAULT_COUPLING_K)
            if isinstance(k, bool) or not isinstance(k, (int, float)) or not 0 <= k < 1:
                r.fail(f"coupling k must lie in [0, 1), got {k!r}", sec, "coupling")
        pdns[pname] = PdnSection(
            pname,
            r.quantity(body, "port_r", "ohm", sec, 0.0),
            r.quantity(body, "port_l", "H", sec, 0.0),
            r.quantity(body, "plane_c", "F", sec, DEFAULT_PLANE_C),
            r.quantity(body, "plane_esr", "ohm", sec, DEFAULT_PLANE_ESR),
            r.quantity(body, "plane_esl", "H", sec, DEFAULT_PLANE_ESL),
            peer, float(k))
        try:
            BoardDescription._plain(pdns[pname])
        except ModelError as exc:
            r.fail(str(exc), sec)
        if not min(pdns[pname].plane_esr, pdns[pname].plane_esl) >= 0:
            r.fail("plane esr and esl must be >= 0", sec)
    for pname, sec in pdns.items():
        if sec.peer is not None and sec.peer not in pdns:
            r.fail(f"coupling peer {sec.peer!r} is not a declared PDN", f"pdn.{pname}", "coupling")
        if sec.peer == pname:
            r.fail("a PDN cannot couple to itself", f"pdn.{pname}", "coupling")

    comps = []
    for cid, body in r.table(doc.get("component", {}), "component").items():
        sec = f"component.{cid}"
        body = r.table(body, sec)
        r.check_keys(body, "component", sec)
        pdn = r.string(body, "pdn", sec, required=True)
        if pdn not in pdns:
            r.fail(f"component {cid!r} references undeclared PDN {pdn!r}", sec, "pdn")
        try:
            comps.append(ComponentSpec(cid, pdn, r.quantity(body, "value", "F", sec, required=True),
                                       r.quantity(body, "esr", "ohm", sec, 0.0),
                                       r.quantity(body, "esl", "H", sec, 0.0)))
        except ModelError as exc:
            r.fail(str(exc), sec)
    known = {c.id for c in comps}

    configs = {}
    for cname, body in r.table(doc.get("config", {}), "config").items():
        sec = f"config.{cname}"
        body = r.table(body, sec)
        r.check_keys(body, "config", sec)
        ids = body.get("components", [])
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            r.fail("'components' must be a list of component ids", sec, "components")
        for i in ids:
            if i not in known:
                r.fail(f"configuration {cname!r} references unknown component {i!r}", sec, "components")
        if len(set(ids)) != len(ids):
            r.fail("duplicate component id in configuration", sec, "components")
        configs[cname] = tuple(ids)

    if probe is not None and probe not in pdns:
        r.fail(f"probe PDN {probe!r} is not declared", "board", "probe")
    return BoardDescription(name, pdns, tuple(comps), configs, sweep, z0, probe)


def dump_board(board: BoardDescription) -> bytes:
    """Serialise ``board``; ``parse_board(dump_board(b)) == b``."""
    q = format_quantity
    head = {"name": board.name, "z0": q(board.z0, "ohm")}
    if board.probe is not None:
        head["probe"] = board.probe
    doc = {"board": head,
           "sweep": {"f_start": q(board.sweep.f_start, "Hz"), "f_stop": q(board.sweep.f_stop, "Hz"),
                     "points": int(board.sweep.points), "spacing": board.sweep.spacing},
           "pdn": {}, "component": {}, "config": {}}
    for name, sec in board.pdns.items():
        body = {"port_r": q(sec.port_r, "ohm"), "port_l": q(sec.port_l, "H"),
                "plane_c": q(sec.plane_c, "F"), "plane_esr": q(sec.plane_esr, "ohm"),
                "plane_esl": q(sec.plane_esl, "H")}
        if sec.peer is not None:
            body["coupling"] = {"peer": sec.peer, "k": sec.k}
        doc["pdn"][name] = body
    for c in board.components:
        doc["component"][c.id] = {"pdn": c.pdn, "value": q(c.capacitance, "F"),
                                  "esr": q(c.esr, "ohm"), "esl": q(c.esl, "H")}
    for name, ids in board.configs.items():
        doc["config"][name] = {"components": list(ids)}
    for key in ("component", "config"):
        if not doc[key]:
            del doc[key]
    return tomli_w.dumps(doc).encode("utf-8")


def load_board(path) -> BoardDescription:
    with open(path, "rb") as fh:
        return parse_board(fh.read())


def save_board(board: BoardDescription, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_board(board))


def evaluation_board() -> BoardDescription:
    """The bundled two-PDN evaluation board: nine decoupling parts, six populations."""
    return parse_board(resources.files("pdnverify.data").joinpath("evaluation_board.toml").read_bytes())


# -- board-level edits --------------------------------------------------------

def add_component(board: BoardDescription, comp: ComponentSpec, configs=()) -> BoardDescription:
    if comp.pdn not in board.pdns:
        raise ModelError(f"component {comp.id!r} references undeclared PDN {comp.pdn!r}")
    if any(c.id == comp.id for c in board.components):
        raise ModelError(f"component id {comp.id!r} already present")
    new_configs = dict(board.configs)
    for name in configs:
        if name not in new_configs:
            raise ModelError(f"board {board.name!r} has no configuration {name!r}")
        new_configs[name] = new_configs[name] + (comp.id,)
    return replace(board, components=board.components + (comp,), configs=new_configs)


def remove_component(board: BoardDescription, comp_id: str) -> BoardDescription:
    board.component(comp_id)
    return replace(board,
                   components=tuple(c for c in board.components if c.id != comp_id),
                   configs={n: tuple(i for i in ids if i != comp_id)
                            for n, ids in board.configs.items()})


def counterfeit_components(board: BoardDescription, ids, esl_factor: float,
                           esr_factor: float) -> BoardDescription:
    """Scale ESL and ESR of the listed parts in the board file itself."""
    ids = set(ids)
    for i in ids:
        board.component(i)
    if not (esl_factor > 0 and esr_factor > 0):
        raise ModelError("counterfeit factors must be > 0")
    comps = tuple(replace(c, esl=c.esl * esl_factor, esr=c.esr * esr_factor) if c.id in ids else c
                  for c in board.components)
    return replace(board, components=comps)


def parse_component(text: str) -> ComponentSpec:
    """``ID:PDN:VALUE[:ESR[:ESL]]`` as used on the command line."""
    parts = text.split(":")
    if not 3 <= len(parts) <= 5:
        raise ValueError(f"component must be ID:PDN:VALUE[:ESR[:ESL]], got {text!r}")
    cid, pdn, value = parts[:3]
    esr = parse_quantity(parts[3], "ohm") if len(parts) > 3 else 0.0
    esl = parse_quantity(parts[4], "H") if len(parts) > 4 else 0.0
    if not math.isfinite(esr + esl):
        raise ValueError(f"non-finite parasitic in {text!r}")
    return ComponentSpec(cid, pdn, parse_quantity(value, "F"), esr, esl)
