"""Sculpting directed bigraphs: data model, validation and presets.

A sculpting bigraph has labelled circles (spatial modes, main or ancillary),
unlabelled dots (one single-boson subtraction operator each) and directed
weighted edges circle -> dot.  Each edge carries a complex probability
amplitude and a normalized two-level internal state; per dot the squared
amplitudes sum to one.

The "effective perfect matching" (EPM) class is the subset whose heralded
output is fully determined by the graph's perfect matchings; the three
built-in presets (GHZ, W, and the three-party GHZ/W superposition) are all
EPM.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from enum import Enum

ATOL = 1e-9


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InternalState:
    """Normalized internal (two-level) state alpha|0> + beta|1>."""

    alpha: complex
    beta: complex

    def __post_init__(self) -> None:
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > ATOL:
            raise ValueError(f"internal state not normalized: |a|^2+|b|^2 = {n}")

    @staticmethod
    def zero() -> "InternalState":
        return InternalState(1.0, 0.0)

    @staticmethod
    def one() -> "InternalState":
        return InternalState(0.0, 1.0)

    @staticmethod
    def plus() -> "InternalState":
        r = 1.0 / math.sqrt(2.0)
        return InternalState(r, r)

    @staticmethod
    def minus() -> "InternalState":
        r = 1.0 / math.sqrt(2.0)
        return InternalState(r, -r)

    @staticmethod
    def named(name: str) -> "InternalState":
        try:
            return _NAMED_STATES[name]()
        except KeyError:
            raise ValueError(f"unknown internal state name {name!r}") from None

    def isclose(self, other: "InternalState", atol: float = ATOL) -> bool:
        return (abs(self.alpha - other.alpha) <= atol
                and abs(self.beta - other.beta) <= atol)

    @property
    def name(self) -> str:
        for name, ctor in _NAMED_STATES.items():
            if self.isclose(ctor()):
                return name
        return "custom"

    def annihilation_coeffs(self) -> tuple[complex, complex]:
        """Coefficients (c0, c1) with a_psi = c0 a_0 + c1 a_1."""
        return (complex(self.alpha).conjugate(), complex(self.beta).conjugate())


_NAMED_STATES = {
    "0": InternalState.zero,
    "1": InternalState.one,
    "+": InternalState.plus,
    "-": InternalState.minus,
}


class CircleKind(Enum):
    MAIN = "main"
    ANCILLA = "ancilla"


@dataclass(frozen=True)
class Circle:
    label: str
    kind: CircleKind


@dataclass(frozen=True)
class Edge:
    """Directed edge circle -> dot with amplitude weight and internal state."""

    mode: str
    dot: int
    amplitude: complex
    state: InternalState


class EpmPattern(Enum):
    A = "A"          # main circle: one |+> edge and one |-> edge to distinct dots
    B = "B"          # ancilla circle: all-|0> edges to distinct dots
    NON_EPM = "non-EPM"


@dataclass
class SculptingBigraph:
    """Circles + dots + directed edges; the compiler/oracle input IR."""

    n_main: int
    ancillas: tuple[str, ...]
    edges: tuple[Edge, ...]
    name: str = ""

    def __post_init__(self) -> None:
        labels = self.main_labels() + list(self.ancillas)
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate circle labels")
        known = set(labels)
        for e in self.edges:
            if e.mode not in known:
                raise ValueError(f"edge references unknown circle {e.mode!r}")

    def main_labels(self) -> list[str]:
        return [str(j) for j in range(1, self.n_main + 1)]

    def circle(self, label: str) -> Circle:
        if label in self.ancillas:
            return Circle(label, CircleKind.ANCILLA)
        if label in self.main_labels():
            return Circle(label, CircleKind.MAIN)
        raise KeyError(f"unknown circle {label!r}")

    def circles(self) -> list[Circle]:
        mains = [Circle(l, CircleKind.MAIN) for l in self.main_labels()]
        ancs = [Circle(l, CircleKind.ANCILLA) for l in self.ancillas]
        return mains + ancs

    def dot_ids(self) -> list[int]:
        return sorted({e.dot for e in self.edges})

    @property
    def n_dots(self) -> int:
        return len(self.dot_ids())

    def edges_of_circle(self, label: str) -> list[Edge]:
        return [e for e in self.edges if e.mode == label]

    def edges_of_dot(self, dot: int) -> list[Edge]:
        return [e for e in self.edges if e.dot == dot]

    @property
    def n_ancilla(self) -> int:
        return len(self.ancillas)


@dataclass
class UndirectedBigraph:
    """Operator-side projection: directions and the initial state dropped."""

    n_main: int
    ancillas: tuple[str, ...]
    edges: tuple[Edge, ...]
    name: str = ""


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def classify_circle(g: SculptingBigraph, label: str) -> EpmPattern:
    """Classify one circle against the allowed EPM edge patterns.

    Main circles match pattern A when they emit exactly one |+> and one |->
    edge to two distinct dots (amplitudes free).  Ancilla circles match
    pattern B when all their edges carry |0> and target pairwise-distinct
    dots.  Everything else is non-EPM.
    """
    circle = g.circle(label)  # raises KeyError for unknown circles
    edges = g.edges_of_circle(label)
    if circle.kind is CircleKind.MAIN:
        if len(edges) != 2:
            return EpmPattern.NON_EPM
        names = sorted(e.state.name for e in edges)
        if names != ["+", "-"] or edges[0].dot == edges[1].dot:
            return EpmPattern.NON_EPM
        return EpmPattern.A
    if not edges:
        return EpmPattern.NON_EPM
    if any(e.state.name != "0" for e in edges):
        return EpmPattern.NON_EPM
    dots = [e.dot for e in edges]
    if len(set(dots)) != len(dots):
        return EpmPattern.NON_EPM
    return EpmPattern.B


def is_epm(g: SculptingBigraph, strict: bool = True) -> bool:
    """True iff every circle classifies as pattern A or B.

    The empty graph is vacuously EPM.  With ``strict=False``, ancilla circles
    whose uniform edge set uses |1> or repeats a target dot are also admitted
    (useful for experimentation; such graphs are rejected by default).
    """
    for c in g.circles():
        pat = classify_circle(g, c.label)
        if pat is EpmPattern.NON_EPM:
            if not strict and c.kind is CircleKind.ANCILLA:
                edges = g.edges_of_circle(c.label)
                states = {e.state.name for e in edges}
                if edges and states <= {"0", "1"} and len(states) == 1:
                    continue
            return False
    return True


def non_epm_circles(g: SculptingBigraph) -> list[str]:
    return [c.label for c in g.circles()
            if classify_circle(g, c.label) is EpmPattern.NON_EPM]


def subtraction_operators(g: SculptingBigraph) -> list[list[tuple[str, InternalState, complex]]]:
    """Per-dot single-boson operator descriptors, ordered by dot id.

    Each descriptor is a list of (spatial label, internal state, coefficient)
    triples; the coefficients of one dot must satisfy sum |c|^2 = 1.
    """
    ops = []
    for dot in g.dot_ids():
        legs = [(e.mode, e.state, e.amplitude) for e in g.edges_of_dot(dot)]
        total = sum(abs(c) ** 2 for _, _, c in legs)
        if abs(total - 1.0) > ATOL:
            raise ValueError(f"dot {dot} violates normalization: sum |amp|^2 = {total}")
        ops.append(legs)
    return ops


# ---------------------------------------------------------------------------
# Perfect matchings
# ---------------------------------------------------------------------------

def perfect_matchings(g: SculptingBigraph) -> list[tuple[int, ...]]:
    """All disjoint edge sets covering every dot and every circle exactly once.

    Returned as tuples of edge indices into ``g.edges``, in deterministic
    order (dots visited by id, candidate edges by circle label).
    """
    dots = g.dot_ids()
    all_labels = set(g.main_labels()) | set(g.ancillas)
    if len(dots) != len(all_labels):
        return []
    by_dot: dict[int, list[int]] = {d: [] for d in dots}
    for idx, e in enumerate(g.edges):
        by_dot[e.dot].append(idx)
    for d in dots:
        by_dot[d].sort(key=lambda i: g.edges[i].mode)

    results: list[tuple[int, ...]] = []
    chosen: list[int] = []
    used: set[str] = set()

    def extend(i: int) -> None:
        if i == len(dots):
            results.append(tuple(chosen))
            return
        for idx in by_dot[dots[i]]:
            mode = g.edges[idx].mode
            if mode in used:
                continue
            used.add(mode)
            chosen.append(idx)
            extend(i + 1)
            chosen.pop()
            used.remove(mode)

    extend(0)
    return results


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_SQ2 = 1.0 / math.sqrt(2.0)


def ghz(n: int) -> SculptingBigraph:
    """Ring graph sculpting the n-party GHZ state with 2n photons.

    Dot j takes a |+> leg from mode j and a |-> leg (amplitude -1/sqrt 2)
    from mode j+1 (cyclic), so its operator is (a_{j,+} - a_{j+1,-})/sqrt(2).
    """
    if n < 2:
        raise ValueError("GHZ preset needs n >= 2")
    edges = []
    for j in range(1, n + 1):
        nxt = j % n + 1
        edges.append(Edge(str(j), j, _SQ2, InternalState.plus()))
        edges.append(Edge(str(nxt), j, -_SQ2, InternalState.minus()))
    return SculptingBigraph(n, (), tuple(edges), name=f"ghz{n}")


def w(n: int) -> SculptingBigraph:
    """Graph sculpting the n-party W state with 2n+1 photons (one ancilla X).

    Dots 1..n implement (a_{j,+} + a_{X,0})/sqrt(2); the final dot spreads a
    |-> subtraction uniformly over all main modes.
    """
    if n < 2:
        raise ValueError("W preset needs n >= 2")
    edges = []
    for j in range(1, n + 1):
        edges.append(Edge(str(j), j, _SQ2, InternalState.plus()))
        edges.append(Edge("X", j, _SQ2, InternalState.zero()))
    rn = 1.0 / math.sqrt(n)
    for k in range(1, n + 1):
        edges.append(Edge(str(k), n + 1, rn, InternalState.minus()))
    return SculptingBigraph(n, ("X",), tuple(edges), name=f"w{n}")


def type5() -> SculptingBigraph:
    """Graph sculpting the three-party GHZ/W superposition with 9 photons.

    Spatial modes {1,2,3,X,Y,Z}; the six dots implement
    (a_{1+}+a_{X0})/r2, (a_{2+}+a_{Y0})/r2, (a_{3+}+a_{Z0})/r2,
    (a_{Z0}-a_{1-})/r2, (a_{X0}+a_{Y0}-a_{2-})/r3, (a_{Y0}+a_{Z0}-a_{3-})/r3.
    """
    r3 = 1.0 / math.sqrt(3.0)
    z = InternalState.zero
    edges = [
        Edge("1", 1, _SQ2, InternalState.plus()),
        Edge("X", 1, _SQ2, z()),
        Edge("2", 2, _SQ2, InternalState.plus()),
        Edge("Y", 2, _SQ2, z()),
        Edge("3", 3, _SQ2, InternalState.plus()),
        Edge("Z", 3, _SQ2, z()),
        Edge("Z", 4, _SQ2, z()),
        Edge("1", 4, -_SQ2, InternalState.minus()),
        Edge("X", 5, r3, z()),
        Edge("Y", 5, r3, z()),
        Edge("2", 5, -r3, InternalState.minus()),
        Edge("Y", 6, r3, z()),
        Edge("Z", 6, r3, z()),
        Edge("3", 6, -r3, InternalState.minus()),
    ]
    return SculptingBigraph(3, ("X", "Y", "Z"), tuple(edges), name="type5")


def preset(kind: str, n: int | None = None) -> SculptingBigraph:
    kind = kind.lower()
    if kind == "ghz":
        return ghz(n if n is not None else 3)
    if kind == "w":
        return w(n if n is not None else 3)
    if kind == "type5":
        if n not in (None, 3):
            raise ValueError("the type5 preset is defined for n = 3 only")
        return type5()
    raise ValueError(f"unknown preset kind {kind!r}")


def random_epm(rng, n_main: int, n_ancilla: int, max_anc_degree: int = 3,
               realizable: bool = False) -> SculptingBigraph:
    """Random EPM graph: pattern-A main circles, pattern-B ancillas.

    By default per-dot amplitudes are random complex numbers normalized to
    sum |amp|^2 = 1.  With ``realizable=True`` every dot gets the hardware
    sign pattern instead (equal magnitudes, minus on |-> legs), which is the
    family the circuit compiler accepts.  Resamples until every dot has at
    least one edge.
    """
    n_dots = n_main + n_ancilla
    anc_labels = [chr(ord("A") + i) for i in range(n_ancilla)]
    for _ in range(1000):
        raw: list[tuple[str, int, InternalState]] = []
        for j in range(1, n_main + 1):
            d_plus, d_minus = rng.choice(n_dots, size=2, replace=False) + 1
            raw.append((str(j), int(d_plus), InternalState.plus()))
            raw.append((str(j), int(d_minus), InternalState.minus()))
        for a in anc_labels:
            deg = int(rng.integers(1, max_anc_degree + 1))
            deg = min(deg, n_dots)
            targets = rng.choice(n_dots, size=deg, replace=False) + 1
            for d in targets:
                raw.append((a, int(d), InternalState.zero()))
        touched = {d for _, d, _ in raw}
        if len(touched) == n_dots:
            break
    else:  # pragma: no cover - astronomically unlikely
        raise RuntimeError("failed to sample a covering EPM graph")

    by_dot: dict[int, list[int]] = {}
    for i, (_, d, _) in enumerate(raw):
        by_dot.setdefault(d, []).append(i)
    amps = [0j] * len(raw)
    for d, idxs in by_dot.items():
        if realizable:
            mag = 1.0 / math.sqrt(len(idxs))
            for i in idxs:
                sign = -1.0 if raw[i][2].name == "-" else 1.0
                amps[i] = sign * mag
        else:
            zs = rng.normal(size=len(idxs)) + 1j * rng.normal(size=len(idxs))
            zs /= math.sqrt(float(sum(abs(z) ** 2 for z in zs)))
            for i, z in zip(idxs, zs):
                amps[i] = complex(z)
    edges = tuple(Edge(m, d, amps[i], s) for i, (m, d, s) in enumerate(raw))
    return SculptingBigraph(n_main, tuple(anc_labels), edges, name="random")


# ---------------------------------------------------------------------------
# Projections and serialization
# ---------------------------------------------------------------------------

def to_undirected(g: SculptingBigraph | UndirectedBigraph) -> UndirectedBigraph:
    """Drop edge directions and the initial-state side; idempotent."""
    return UndirectedBigraph(g.n_main, tuple(g.ancillas), tuple(g.edges), g.name)


class GraphSchemaError(ValueError):
    """Raised on malformed graph JSON, with a field path in the message."""


def _leg_to_json(e: Edge) -> dict:
    leg: dict = {"mode": e.mode, "state": e.state.name,
                 "amplitude": [e.amplitude.real, e.amplitude.imag]}
    if leg["state"] == "custom":
        leg["alpha"] = [e.state.alpha.real, e.state.alpha.imag]
        leg["beta"] = [e.state.beta.real, e.state.beta.imag]
    return leg


def serialize_graph(g: SculptingBigraph) -> str:
    dots = []
    for dot in g.dot_ids():
        legs = [_leg_to_json(e) for e in g.edges_of_dot(dot)]
        dots.append({"id": dot, "legs": legs})
    doc = {"n_main": g.n_main, "ancillas": list(g.ancillas), "dots": dots}
    if g.name:
        doc["name"] = g.name
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _complex_field(obj, key: str, where: str) -> complex:
    val = obj.get(key)
    if (not isinstance(val, (list, tuple)) or len(val) != 2
            or not all(isinstance(x, (int, float)) for x in val)):
        raise GraphSchemaError(f"{where}.{key}: expected [re, im]")
    return complex(val[0], val[1])


def parse_graph(text: str) -> SculptingBigraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise GraphSchemaError("top level: expected an object")
    n_main = doc.get("n_main")
    if not isinstance(n_main, int) or n_main < 0:
        raise GraphSchemaError("n_main: expected a non-negative integer")
    ancillas = doc.get("ancillas", [])
    if not isinstance(ancillas, list) or not all(isinstance(a, str) for a in ancillas):
        raise GraphSchemaError("ancillas: expected a list of labels")
    dots = doc.get("dots")
    if not isinstance(dots, list):
        raise GraphSchemaError("dots: expected a list")
    edges: list[Edge] = []
    for i, dot in enumerate(dots):
        where = f"dots[{i}]"
        if not isinstance(dot, dict) or not isinstance(dot.get("id"), int):
            raise GraphSchemaError(f"{where}: expected an object with integer id")
        legs = dot.get("legs")
        if not isinstance(legs, list) or not legs:
            raise GraphSchemaError(f"{where}.legs: expected a non-empty list")
        total = 0.0
        for k, leg in enumerate(legs):
            lwhere = f"{where}.legs[{k}]"
            if not isinstance(leg, dict) or not isinstance(leg.get("mode"), str):
                raise GraphSchemaError(f"{lwhere}: expected an object with a mode label")
            sname = leg.get("state")
            if sname in _NAMED_STATES:
                state = InternalState.named(sname)
            elif sname == "custom":
                state = InternalState(_complex_field(leg, "alpha", lwhere),
                                      _complex_field(leg, "beta", lwhere))
            else:
                raise GraphSchemaError(f"{lwhere}.state: expected one of 0/1/+/-/custom")
            amp = _complex_field(leg, "amplitude", lwhere)
            if "phase" in leg:
                ph = leg["phase"]
                if not isinstance(ph, (int, float)):
                    raise GraphSchemaError(f"{lwhere}.phase: expected radians")
                amp *= cmath.exp(1j * ph)
            total += abs(amp) ** 2
            edges.append(Edge(leg["mode"], dot["id"], amp, state))
        if abs(total - 1.0) > ATOL:
            raise GraphSchemaError(
                f"{where}: per-dot normalization violated (sum |amp|^2 = {total:.12g})")
    g = SculptingBigraph(n_main, tuple(ancillas), tuple(edges),
                         name=doc.get("name", ""))
    return g


_DOT_COLORS = {"0": "black", "1": "gray40", "+": "red", "-": "blue", "custom": "purple"}
_DOT_STYLES = {"0": "solid", "1": "dotted", "+": "solid", "-": "solid", "custom": "dashed"}


def graph_to_dot(g: SculptingBigraph | UndirectedBigraph) -> str:
    """Graphviz export: circles as labelled ellipses, dots as points."""
    directed = isinstance(g, SculptingBigraph)
    lines = ["digraph sculpting {" if directed else "graph sculpting {"]
    lines.append("  rankdir=LR;")
    mains = [str(j) for j in range(1, g.n_main + 1)]
    for label in mains:
        lines.append(f'  "c{label}" [label="{label}", shape=ellipse];')
    for label in g.ancillas:
        lines.append(f'  "c{label}" [label="{label}", shape=ellipse, style=dashed];')
    for d in sorted({e.dot for e in g.edges}):
        lines.append(f'  "d{d}" [label="", shape=point, width=0.12];')
    arrow = "->" if directed else "--"
    for e in g.edges:
        color = _DOT_COLORS[e.state.name]
        style = _DOT_STYLES[e.state.name]
        lines.append(f'  "c{e.mode}" {arrow} "d{e.dot}" [color={color}, style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
