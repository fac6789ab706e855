"""Linear-optical circuit IR: wires, elements, validation, JSON and DOT.

A wire is one bosonic channel.  In polarization encoding every location
(spatial path) owns an H wire and a V wire; in dual-rail encoding the two
channels are the rails "0" and "1".  Elements are kept in application order;
detector groups are terminal markers listed separately, one per subtractor.

Element semantics (applied by :mod:`sculpt.sim`):
    * ``HWP``   a†_H -> (a†_H + a†_V)/r2,  a†_V -> (a†_H - a†_V)/r2
    * ``UHWP``  a†_H -> (-a†_H + a†_V)/r2, a†_V -> (a†_H + a†_V)/r2
    * ``PBS``   H transmitted, V reflected, no reflection phase
    * ``Multiport`` n-port Fourier mixer U_jk = exp(2*pi*i*j*k/n)/sqrt(n),
      applied channel-wise to its port groups; a 2-port is a balanced BS
    * ``Swap``/``ReturnMerge``  wire permutations
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

POLARIZATION = "polarization"
DUAL_RAIL = "dual-rail"

STAGES = ("source", "prep", "split", "route", "subtract", "merge", "mix")


@dataclass(frozen=True)
class Wire:
    id: int
    mode: str
    channel: str


@dataclass(frozen=True)
class Source:
    wire: int
    photons: int
    stage: str = "source"
    kind = "source"

    def wires_used(self) -> tuple[int, ...]:
        return (self.wire,)


@dataclass(frozen=True)
class HWP:
    mode: str
    h: int
    v: int
    stage: str = "prep"
    kind = "hwp"

    def wires_used(self) -> tuple[int, ...]:
        return (self.h, self.v)


@dataclass(frozen=True)
class UHWP:
    """Half-wave plate rotated to exchange {H,V} with {A,D}."""

    mode: str
    h: int
    v: int
    stage: str = "subtract"
    kind = "uhwp"

    def wires_used(self) -> tuple[int, ...]:
        return (self.h, self.v)


@dataclass(frozen=True)
class PBS:
    mode_a: str
    mode_b: str
    a_h: int
    a_v: int
    b_h: int
    b_v: int
    stage: str = "split"
    kind = "pbs"

    def wires_used(self) -> tuple[int, ...]:
        return (self.a_h, self.a_v, self.b_h, self.b_v)


@dataclass(frozen=True)
class Multiport:
    """Fourier mixer over n port groups; each group lists one wire per
    channel, and the same n x n unitary acts on every channel slot."""

    ports: tuple[tuple[int, ...], ...]
    stage: str = "mix"

    @property
    def n(self) -> int:
        return len(self.ports)

    @property
    def kind(self) -> str:
        return "bs" if self.n == 2 else "multiport"

    def wires_used(self) -> tuple[int, ...]:
        return tuple(w for grp in self.ports for w in grp)


@dataclass(frozen=True)
class Swap:
    """Wire permutation, stored as a full mapping (src -> dst)."""

    mapping: tuple[tuple[int, int], ...]
    stage: str = "route"
    kind = "swap"

    def wires_used(self) -> tuple[int, ...]:
        return tuple(sorted({w for pair in self.mapping for w in pair}))


@dataclass(frozen=True)
class ReturnMerge:
    """Routes subtractor return wires back onto their origin mode location.

    A non-empty mapping merges an orthogonally-polarized return into the mode
    (physically a PBS); an empty mapping marks a pass-through return.
    """

    mode: str
    mapping: tuple[tuple[int, int], ...]
    stage: str = "merge"
    kind = "merge"

    def wires_used(self) -> tuple[int, ...]:
        return tuple(sorted({w for pair in self.mapping for w in pair}))


Element = Source | HWP | UHWP | PBS | Multiport | Swap | ReturnMerge


@dataclass(frozen=True)
class DetectorGroup:
    gid: int
    wires: tuple[int, ...]
    required: int


@dataclass
class Circuit:
    wires: list[Wire]
    elements: list[Element]
    detector_groups: list[DetectorGroup]
    outputs: list[int]
    output_modes: list[str]
    encoding: str = POLARIZATION
    name: str = ""
    layout: object | None = field(default=None, compare=False, repr=False)

    def wire(self, wid: int) -> Wire:
        return self.wires[wid]

    def wire_ids(self) -> set[int]:
        return {w.id for w in self.wires}

    def mode_wires(self, mode: str) -> dict[str, int]:
        return {w.channel: w.id for w in self.wires if w.mode == mode}

    def detector_wires(self) -> set[int]:
        return {w for grp in self.detector_groups for w in grp.wires}

    def count_elements(self, kind: str, stage: str | None = None,
                       ports: int | None = None) -> int:
        total = 0
        for el in self.elements:
            if el.kind != kind:
                continue
            if stage is not None and el.stage != stage:
                continue
            if ports is not None and getattr(el, "n", None) != ports:
                continue
            total += 1
        return total


def validate(c: Circuit) -> list[str]:
    """Structural diagnostics; an empty list means the invariants hold."""
    diags: list[str] = []
    ids = c.wire_ids()
    if sorted(ids) != list(range(len(c.wires))):
        diags.append("wire ids are not dense 0..n-1")
    for i, el in enumerate(c.elements):
        for w in el.wires_used():
            if w not in ids:
                diags.append(f"element {i} ({el.kind}) consumes undeclared wire {w}")
        if el.kind in ("swap", "merge"):
            srcs = [s for s, _ in el.mapping]
            dsts = [d for _, d in el.mapping]
            if len(set(srcs)) != len(srcs) or sorted(srcs) != sorted(dsts):
                diags.append(f"element {i} ({el.kind}) is not a permutation")
        if el.kind in ("bs", "multiport"):
            if el.n < 2:
                diags.append(f"element {i} multiport needs >= 2 ports")
            arities = {len(grp) for grp in el.ports}
            if len(arities) != 1:
                diags.append(f"element {i} multiport has ragged port groups")
            flat = el.wires_used()
            if len(set(flat)) != len(flat):
                diags.append(f"element {i} multiport repeats a wire")
    seen: set[int] = set()
    for grp in c.detector_groups:
        overlap = seen & set(grp.wires)
        if overlap:
            diags.append(f"detector group {grp.gid} overlaps wires {sorted(overlap)}")
        seen |= set(grp.wires)
        if grp.required < 0:
            diags.append(f"detector group {grp.gid} has negative required count")
    out_overlap = set(c.outputs) & seen
    if out_overlap:
        diags.append(f"output wires {sorted(out_overlap)} are also detector wires")
    for w in c.outputs:
        if w not in ids:
            diags.append(f"output wire {w} undeclared")
    if c.encoding not in (POLARIZATION, DUAL_RAIL):
        diags.append(f"unknown encoding {c.encoding!r}")
    return diags


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

class CircuitSchemaError(ValueError):
    """Raised on malformed circuit JSON."""


def _element_to_json(el: Element) -> dict:
    doc: dict = {"kind": el.kind, "stage": el.stage}
    if isinstance(el, Source):
        doc.update(wire=el.wire, photons=el.photons)
    elif isinstance(el, (HWP, UHWP)):
        doc.update(mode=el.mode, h=el.h, v=el.v)
    elif isinstance(el, PBS):
        doc.update(mode_a=el.mode_a, mode_b=el.mode_b,
                   a_h=el.a_h, a_v=el.a_v, b_h=el.b_h, b_v=el.b_v)
    elif isinstance(el, Multiport):
        doc.update(ports=[list(grp) for grp in el.ports])
    elif isinstance(el, (Swap, ReturnMerge)):
        doc.update(mapping=[list(p) for p in el.mapping])
        if isinstance(el, ReturnMerge):
            doc.update(mode=el.mode)
    return doc


def serialize_circuit(c: Circuit) -> str:
    doc = {
        "encoding": c.encoding,
        "name": c.name,
        "wires": [{"id": w.id, "mode": w.mode, "channel": w.channel} for w in c.wires],
        "elements": [_element_to_json(el) for el in c.elements],
        "detector_groups": [{"id": g.gid, "wires": list(g.wires), "count": g.required}
                            for g in c.detector_groups],
        "outputs": list(c.outputs),
        "output_modes": list(c.output_modes),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _element_from_json(doc: dict, where: str) -> Element:
    kind = doc.get("kind")
    stage = doc.get("stage", "")
    try:
        if kind == "source":
            return Source(doc["wire"], doc["photons"], stage)
        if kind == "hwp":
            return HWP(doc["mode"], doc["h"], doc["v"], stage)
        if kind == "uhwp":
            return UHWP(doc["mode"], doc["h"], doc["v"], stage)
        if kind == "pbs":
            return PBS(doc["mode_a"], doc["mode_b"], doc["a_h"], doc["a_v"],
                       doc["b_h"], doc["b_v"], stage)
        if kind in ("bs", "multiport"):
            ports = tuple(tuple(int(w) for w in grp) for grp in doc["ports"])
            return Multiport(ports, stage)
        if kind == "swap":
            return Swap(tuple((int(a), int(b)) for a, b in doc["mapping"]), stage)
        if kind == "merge":
            return ReturnMerge(doc["mode"],
                               tuple((int(a), int(b)) for a, b in doc["mapping"]), stage)
    except (KeyError, TypeError) as exc:
        raise CircuitSchemaError(f"{where}: malformed {kind} element ({exc})") from None
    raise CircuitSchemaError(f"{where}: unknown element kind {kind!r}")


def parse_circuit(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitSchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise CircuitSchemaError("top level: expected an object")
    try:
        wires = [Wire(w["id"], w["mode"], w["channel"]) for w in doc["wires"]]
        elements = [_element_from_json(e, f"elements[{i}]")
                    for i, e in enumerate(doc["elements"])]
        groups = [DetectorGroup(g["id"], tuple(g["wires"]), g["count"])
                  for g in doc["detector_groups"]]
        c = Circuit(wires, elements, groups, list(doc["outputs"]),
                    list(doc["output_modes"]), doc.get("encoding", POLARIZATION),
                    doc.get("name", ""))
    except (KeyError, TypeError) as exc:
        raise CircuitSchemaError(f"missing or malformed field: {exc}") from None
    return c


def circuit_to_dot(c: Circuit) -> str:
    """Topology export: one node per element, edges follow each wire."""
    lines = ["digraph circuit {", "  rankdir=LR;", '  node [fontsize=10];']
    names = []
    for i, el in enumerate(c.elements):
        label = el.kind
        if isinstance(el, Multiport):
            label = f"{el.kind}{el.n}"
        names.append(f"e{i}")
        lines.append(f'  e{i} [label="{label}", shape=box];')
    for g in c.detector_groups:
        lines.append(f'  det{g.gid} [label="detect {g.required}", shape=doublecircle];')
    for w in c.wires:
        users = [f"e{i}" for i, el in enumerate(c.elements) if w.id in el.wires_used()]
        for g in c.detector_groups:
            if w.id in g.wires:
                users.append(f"det{g.gid}")
        for a, b in zip(users, users[1:]):
            lines.append(f'  {a} -> {b} [label="{w.mode}.{w.channel}", fontsize=8];')
    lines.append("}")
    return "\n".join(lines) + "\n"
